"""Internal unit system: angstrom, femtosecond, electronvolt, amu, kelvin."""

from dataclasses import dataclass

# CODATA 2018
_EV = 1.602176634e-19  # J
_AMU = 1.66053906660e-27  # kg
_ANGSTROM = 1e-10  # m
_FS = 1e-15  # s


@dataclass(frozen=True)
class UnitSystem:
    length: str = "angstrom"
    time: str = "femtosecond"
    energy: str = "electronvolt"
    mass: str = "amu"
    temperature: str = "kelvin"
    k_B: float = 8.617333262e-5  # eV/K
    # (eV / (angstrom * amu)) expressed in angstrom / fs^2
    force_to_accel: float = _EV / (_ANGSTROM * _AMU) * _FS**2 / _ANGSTROM

    def header(self) -> dict:
        return {
            "length": self.length,
            "time": self.time,
            "energy": self.energy,
            "mass": self.mass,
            "temperature": self.temperature,
        }


UNITS = UnitSystem()
KB = UNITS.k_B
FORCE_TO_ACCEL = UNITS.force_to_accel

"""Velocity-Verlet molecular dynamics, NVE or Langevin NVT (BAOAB splitting)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from aloxbench.errors import ConfigError, SimulationError
from aloxbench.dynamics.trajectory import Trajectory
from aloxbench.structure import Frame
from aloxbench.units import FORCE_TO_ACCEL, KB


@dataclass(frozen=True)
class MdConfig:
    dt: float = 0.5
    steps: int = 1000
    thermostat: str = "none"  # none | langevin
    temperature: float = 300.0
    friction: float = 0.01  # 1/fs
    seed: int = 0
    snapshot_every: int = 10

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.friction < 0:
            raise ConfigError("friction must be >= 0")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")
        if self.thermostat not in ("none", "langevin"):
            raise ConfigError(f"unknown thermostat {self.thermostat!r}")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def maxwell_boltzmann(masses: np.ndarray, temperature: float, rng: np.random.Generator,
                      remove_com: bool = True) -> np.ndarray:
    """Velocities in angstrom/fs drawn at ``temperature``."""
    sigma = np.sqrt(KB * temperature / masses * FORCE_TO_ACCEL)
    v = rng.normal(size=(len(masses), 3)) * sigma[:, None]
    if remove_com and len(masses) > 1:
        v -= (masses[:, None] * v).sum(axis=0) / masses.sum()
    return v


def kinetic_energy(masses: np.ndarray, velocities: np.ndarray) -> float:
    return float(0.5 * np.sum(masses[:, None] * velocities**2) / FORCE_TO_ACCEL)


def instantaneous_temperature(masses, velocities) -> float:
    n = len(masses)
    if n == 0:
        return 0.0
    return 2.0 * kinetic_energy(masses, velocities) / (3.0 * n * KB)


def _guard(step: int, energy: float, forces: np.ndarray, positions: np.ndarray) -> None:
    if np.isfinite(energy) and np.all(np.isfinite(forces)) and np.all(np.isfinite(positions)):
        return
    bad = np.nonzero(~(np.all(np.isfinite(forces), axis=1) & np.all(np.isfinite(positions), axis=1)))[0]
    atom = int(bad[0]) if len(bad) else -1
    raise SimulationError(f"non-finite energy/force at step {step}, atom {atom}")


# hook(step, frame) -> Frame | None; a returned frame replaces the running state
StepHook = Callable[[int, Frame], "Frame | None"]


def md_run(frame: Frame, potential, config: MdConfig, hook: StepHook | None = None,
           tag: str = "md", on_snapshot: Callable[[Frame], Frame] | None = None) -> Trajectory:
    """Integrate ``config.steps`` steps; snapshot at step 0 and every ``snapshot_every``.

    ``potential.compute(structure)`` must return ``(energy, forces)``.
    ``on_snapshot`` may return an annotated copy of each snapshot frame.
    """
    rng = np.random.default_rng(config.seed)
    structure = frame.structure
    masses = structure.masses
    x = structure.positions.copy()
    if frame.velocities is not None:
        v = frame.velocities.copy()
    elif config.thermostat == "langevin":
        v = maxwell_boltzmann(masses, config.temperature, rng)
    else:
        v = np.zeros_like(x)
    dt = config.dt
    langevin = config.thermostat == "langevin"
    c1 = np.exp(-config.friction * dt)
    c2 = np.sqrt(1.0 - c1 * c1)
    traj = Trajectory(provenance={"engine": "md", "config": config.to_dict()})
    t0 = frame.time

    def setup(s):
        m = s.masses
        return m, (FORCE_TO_ACCEL / m)[:, None], np.sqrt(KB * config.temperature * FORCE_TO_ACCEL / m)[:, None]

    masses, inv_m, vscale = setup(structure)
    energy, forces = potential.compute(structure)
    _guard(0, energy, forces, x)

    def snapshot(step):
        s = structure.with_positions(x)
        fr = Frame(s, v.copy(), t0 + step * dt, f"{tag}/step{step}")
        if on_snapshot is not None:
            fr = on_snapshot(fr)
        traj.frames.append(fr)
        traj.temperatures.append(instantaneous_temperature(masses, v))
        traj.energies.append(float(energy + kinetic_energy(masses, v)))

    snapshot(0)
    for step in range(1, config.steps + 1):
        v += 0.5 * dt * forces * inv_m
        if langevin:
            x += 0.5 * dt * v
            v = c1 * v + c2 * vscale * rng.normal(size=v.shape)
            x += 0.5 * dt * v
        else:
            x += dt * v
        structure = structure.with_positions(x)
        energy, forces = potential.compute(structure)
        _guard(step, energy, forces, x)
        v += 0.5 * dt * forces * inv_m
        if hook is not None:
            new = hook(step, Frame(structure, v.copy(), t0 + step * dt, tag))
            if new is not None:
                structure = new.structure
                x = structure.positions.copy()
                v = new.velocities.copy() if new.velocities is not None else np.zeros_like(x)
                masses, inv_m, vscale = setup(structure)
                energy, forces = potential.compute(structure)
                _guard(step, energy, forces, x)
        if step % config.snapshot_every == 0:
            snapshot(step)
    return traj

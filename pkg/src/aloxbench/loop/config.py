"""Run configuration: one JSON document holding every sub-configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from aloxbench.committee import CommitteeConfig
from aloxbench.descriptors.acsf import AcsfParams
from aloxbench.descriptors.soap import SoapParams
from aloxbench.dynamics.explore import ExploreProtocol
from aloxbench.dynamics.scene import SceneSpec
from aloxbench.errors import ConfigError

CONFIG_VERSION = 1


@dataclass(frozen=True)
class LoopConfig:
    eps_lo: float = 0.12
    eps_hi: float = 0.35
    max_candidates_per_iter: int = 200
    max_iterations: int = 30
    convergence_target: float = 0.01
    temperature_ladder: tuple[float, ...] = (200.0, 1000.0, 1500.0, 2000.0, 3000.0)
    seed: int = 0
    heldout_fraction: float = 0.1
    d_min: float = 0.05
    pca_max_points: int = 2000
    parity_cap: int = 5000

    def __post_init__(self):
        object.__setattr__(self, "temperature_ladder", tuple(float(t) for t in self.temperature_ladder))
        if not 0 < self.eps_lo < self.eps_hi:
            raise ConfigError("need 0 < eps_lo < eps_hi")
        if not 0 < self.convergence_target < 1:
            raise ConfigError("convergence_target must lie in (0, 1)")
        if self.max_candidates_per_iter < 0 or self.max_iterations < 1:
            raise ConfigError("invalid iteration limits")
        if not 0 < self.heldout_fraction < 1:
            raise ConfigError("heldout_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SeedSpec:
    """One seed-dataset system: ``bulk_fcc``, ``oxide`` (random packing) or ``cluster``."""

    kind: str = "bulk_fcc"
    n_cells: int = 3
    box: float = 12.5
    n_al: int = 0
    n_o: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("bulk_fcc", "oxide", "cluster"):
            raise ConfigError(f"unknown seed system kind {self.kind!r}")


@dataclass(frozen=True)
class SeedProtocol:
    systems: tuple[SeedSpec, ...] = (
        SeedSpec("bulk_fcc", n_cells=3),
        SeedSpec("oxide", box=11.0, n_al=32, n_o=48, seed=1),
        SeedSpec("cluster", box=16.0, n_al=6, n_o=3, seed=2),
    )
    temperatures: tuple[float, ...] | None = None  # None: use the loop ladder
    steps: int = 2000
    snapshot_every: int = 50
    dt: float = 0.5
    friction: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple(
            s if isinstance(s, SeedSpec) else SeedSpec(**s) for s in self.systems))
        if self.temperatures is not None:
            object.__setattr__(self, "temperatures", tuple(float(t) for t in self.temperatures))


@dataclass(frozen=True)
class RunConfig:
    loop: LoopConfig = field(default_factory=LoopConfig)
    acsf: AcsfParams = field(default_factory=AcsfParams)
    soap: SoapParams = field(default_factory=SoapParams)
    committee: CommitteeConfig = field(default_factory=CommitteeConfig)
    explore: ExploreProtocol = field(default_factory=ExploreProtocol)
    scenes: tuple[SceneSpec, ...] = (SceneSpec(particle_radius=8.0, box_length=30.0, n_O2=5),)
    seed_protocol: SeedProtocol = field(default_factory=SeedProtocol)
    oracle_params: str | None = None  # path; None means the bundled toy set

    def to_dict(self) -> dict:
        return {
            "format": "aloxbench-run-config",
            "version": CONFIG_VERSION,
            "loop": asdict(self.loop),
            "acsf": self.acsf.to_dict(),
            "soap": self.soap.to_dict(),
            "committee": self.committee.to_dict(),
            "explore": self.explore.to_dict(),
            "scenes": [s.to_dict() for s in self.scenes],
            "seed_protocol": asdict(self.seed_protocol),
            "oracle_params": self.oracle_params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        if d.get("format") != "aloxbench-run-config":
            raise ConfigError("not a run configuration document")
        if d.get("version") != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {d.get('version')}")
        known = {"format", "version", "loop", "acsf", "soap", "committee", "explore", "scenes", "seed_protocol",
                 "oracle_params"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        default = cls()
        try:
            return cls(
                loop=LoopConfig(**d["loop"]) if "loop" in d else default.loop,
                acsf=AcsfParams.from_dict(d["acsf"]) if "acsf" in d else default.acsf,
                soap=SoapParams.from_dict(d["soap"]) if "soap" in d else default.soap,
                committee=CommitteeConfig.from_dict(d["committee"]) if "committee" in d else default.committee,
                explore=ExploreProtocol.from_dict(d["explore"]) if "explore" in d else default.explore,
                scenes=tuple(SceneSpec(**s) for s in d["scenes"]) if "scenes" in d else default.scenes,
                seed_protocol=SeedProtocol(**d["seed_protocol"]) if "seed_protocol" in d else default.seed_protocol,
                oracle_params=d.get("oracle_params"),
            )
        except TypeError as exc:
            raise ConfigError(f"bad configuration field: {exc}") from None

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

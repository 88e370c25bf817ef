"""Committee-driven exploration over scenes and a temperature ladder."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from aloxbench.committee import Committee
from aloxbench.dynamics.md import MdConfig, maxwell_boltzmann, md_run
from aloxbench.dynamics.replenish import ReplenishPolicy, replenish_hook
from aloxbench.dynamics.tfmc import TfmcConfig, tfmc_run
from aloxbench.dynamics.trajectory import Trajectory
from aloxbench.errors import AloxError, ConfigError
from aloxbench.structure import Frame

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExploreProtocol:
    engine: str = "md"  # md | tfmc | alternating (legs alternate by temperature index)
    n_snapshots: int = 100
    snapshot_every: int = 10
    dt: float = 0.5
    friction: float = 0.01
    delta_max: float = 0.2
    seed: int = 0
    replenish: ReplenishPolicy | None = None

    def __post_init__(self):
        if self.engine not in ("md", "tfmc", "alternating"):
            raise ConfigError(f"unknown exploration engine {self.engine!r}")
        if self.n_snapshots < 1 or self.snapshot_every < 1:
            raise ConfigError("n_snapshots and snapshot_every must be >= 1")

    @property
    def steps(self) -> int:
        return (self.n_snapshots - 1) * self.snapshot_every

    def engine_for(self, t_index: int) -> str:
        if self.engine == "alternating":
            return "md" if t_index % 2 == 0 else "tfmc"
        return self.engine

    def to_dict(self) -> dict:
        d = asdict(self)
        d["replenish"] = None if self.replenish is None else self.replenish.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ExploreProtocol:
        d = dict(d)
        if d.get("replenish") is not None:
            d["replenish"] = ReplenishPolicy(**d["replenish"])
        return cls(**d)


@dataclass(eq=False)
class Leg:
    scene: int
    temperature: float
    engine: str
    trajectory: Trajectory | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(eq=False)
class ExploreResult:
    legs: list[Leg] = field(default_factory=list)

    @property
    def frames(self) -> list[Frame]:
        return [f for leg in self.legs if leg.ok for f in leg.trajectory.frames]

    @property
    def failed(self) -> list[Leg]:
        return [leg for leg in self.legs if not leg.ok]


def leg_seed(master: int, scene: int, t_index: int) -> int:
    """Independent per-leg stream so the order legs run in cannot matter."""
    ss = np.random.SeedSequence([int(master), int(scene), int(t_index)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def run_leg(committee: Committee, scene: Frame, scene_index: int, temperature: float, t_index: int,
            protocol: ExploreProtocol, tag_prefix: str = "explore") -> Leg:
    engine = protocol.engine_for(t_index)
    seed = leg_seed(protocol.seed, scene_index, t_index)
    rng = np.random.default_rng(seed)
    potential = committee.mean_potential()
    tag = f"{tag_prefix}/s{scene_index}/T{temperature:g}/{engine}"
    leg = Leg(scene_index, float(temperature), engine)

    def annotate(fr: Frame) -> Frame:
        pred = committee.predict(fr.structure)
        step = int(fr.tag.rsplit("step", 1)[-1])
        ann = dict(fr.annotations)
        ann.update({"epsilon_f": pred.epsilon_f, "temperature": float(temperature),
                    "engine": engine, "step": step, "scene": scene_index})
        return Frame(fr.structure, fr.velocities, fr.time, fr.tag, ann)

    hook = None
    if protocol.replenish is not None:
        policy = protocol.replenish
        hook = replenish_hook(policy, temperature, np.random.default_rng(leg_seed(policy.seed, scene_index, t_index)))

    start = Frame(scene.structure, maxwell_boltzmann(scene.structure.masses, temperature, rng), 0.0, tag)
    try:
        if engine == "md":
            cfg = MdConfig(dt=protocol.dt, steps=protocol.steps, thermostat="langevin",
                           temperature=temperature, friction=protocol.friction, seed=seed,
                           snapshot_every=protocol.snapshot_every)
            leg.trajectory = md_run(start, potential, cfg, hook=hook, tag=tag, on_snapshot=annotate)
        else:
            cfg = TfmcConfig(temperature=temperature, delta_max=protocol.delta_max, steps=protocol.steps,
                             seed=seed, snapshot_every=protocol.snapshot_every)
            leg.trajectory = tfmc_run(start, potential, cfg, hook=hook, tag=tag, on_snapshot=annotate)
    except AloxError as exc:
        log.warning("exploration leg scene=%d T=%g failed: %s", scene_index, temperature, exc)
        leg.error = f"{exc.category}: {exc}"
    return leg


def explore(committee: Committee, scenes, temperature_ladder, protocol: ExploreProtocol,
            tag_prefix: str = "explore") -> ExploreResult:
    """Run every (scene, temperature) leg under the committee-mean potential.

    A failing leg is recorded and does not stop the others.
    """
    result = ExploreResult()
    for si, scene in enumerate(scenes):
        for ti, T in enumerate(temperature_ladder):
            result.legs.append(run_leg(committee, scene, si, T, ti, protocol, tag_prefix))
    return result

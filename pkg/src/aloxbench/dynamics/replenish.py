"""Periodic O2 top-up for oxidation runs."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from aloxbench.analysis.census import CensusCriteria, species_census
from aloxbench.dynamics.md import maxwell_boltzmann
from aloxbench.dynamics.scene import place_o2
from aloxbench.errors import ConfigError
from aloxbench.structure import MASSES, O, Frame, Structure


@dataclass(frozen=True)
class ReplenishPolicy:
    target_n_O2: int = 5
    period: int = 200
    exclusion_radius: float = 3.0
    bond_length: float = 1.21
    seed: int = 0

    def __post_init__(self):
        if self.period < 1:
            raise ConfigError("replenish period must be >= 1")
        if not self.exclusion_radius > self.bond_length / 2:
            raise ConfigError("exclusion_radius must exceed half the bond length")

    def to_dict(self) -> dict:
        return asdict(self)


def replenish_oxygen(frame: Frame, policy: ReplenishPolicy, temperature: float = 300.0,
                     rng: np.random.Generator | None = None,
                     criteria: CensusCriteria = CensusCriteria()) -> Frame:
    """Top the gas-phase O2 count back up to ``policy.target_n_O2``; never removes atoms."""
    rng = rng if rng is not None else np.random.default_rng(policy.seed)
    census = species_census(frame, criteria)
    deficit = policy.target_n_O2 - census.n_O2_gas
    if deficit <= 0:
        return frame
    s = frame.structure
    new = place_o2(s, deficit, rng, policy.exclusion_radius, policy.bond_length)
    structure = Structure(s.cell, list(s.species_ids) + [O] * len(new), np.vstack([s.positions, new]), s.pbc)
    vel = None
    if frame.velocities is not None:
        v_new = maxwell_boltzmann(np.full(len(new), MASSES[O]), temperature, rng, remove_com=False)
        vel = np.vstack([frame.velocities, v_new])
    ann = dict(frame.annotations)
    ann["replenished"] = int(deficit)
    return Frame(structure, vel, frame.time, frame.tag, ann)


def replenish_hook(policy: ReplenishPolicy, temperature: float, rng: np.random.Generator):
    """Integrator hook that tops up O2 every ``policy.period`` steps."""

    def hook(step, fr):
        if step % policy.period:
            return None
        new = replenish_oxygen(fr, policy, temperature, rng)
        return None if new is fr else new

    return hook


def oxidation_run(scene: Frame, potential, temperature: float, steps: int, policy: ReplenishPolicy | None,
                  dt: float = 0.5, friction: float = 0.01, snapshot_every: int = 100, seed: int = 0,
                  tag: str = "oxidation"):
    """Langevin MD of a particle in O2 with optional replenishment; velocities are redrawn at ``temperature``."""
    from aloxbench.dynamics.md import MdConfig, md_run

    rng = np.random.default_rng(seed)
    start = Frame(scene.structure, maxwell_boltzmann(scene.structure.masses, temperature, rng), 0.0, tag)
    hook = None if policy is None else replenish_hook(policy, temperature, np.random.default_rng([seed, 1]))
    cfg = MdConfig(dt=dt, steps=steps, thermostat="langevin", temperature=temperature, friction=friction,
                   seed=seed, snapshot_every=snapshot_every)
    return md_run(start, potential, cfg, hook=hook, tag=tag)

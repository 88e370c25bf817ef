"""Time-stamped force-bias Monte Carlo.

Each step moves every atom along each Cartesian axis by ``xi * delta_i`` with
``delta_i = delta_max * (m_min / m_i) ** 0.25`` and ``xi`` in [-1, 1] drawn from
the density proportional to ``exp(2 gamma xi)``, where
``gamma = F * delta_i / (2 k_B T)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from aloxbench.dynamics.md import StepHook, _guard
from aloxbench.dynamics.trajectory import Trajectory
from aloxbench.errors import ConfigError
from aloxbench.structure import Frame
from aloxbench.units import KB

_GAMMA_EPS = 1e-10


@dataclass(frozen=True)
class TfmcConfig:
    temperature: float = 1000.0
    delta_max: float = 0.2  # angstrom, for the lightest species present
    steps: int = 1000
    seed: int = 0
    fix_com: bool = True
    snapshot_every: int = 10
    time_per_step: float = 1.0  # nominal time stamp increment per MC step

    def __post_init__(self):
        if self.delta_max <= 0:
            raise ConfigError("delta_max must be positive")
        if self.temperature <= 0:
            raise ConfigError("tfMC temperature must be positive")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def displacement_scale(masses: np.ndarray, delta_max: float) -> np.ndarray:
    masses = np.asarray(masses, dtype=float)
    return delta_max * (masses.min() / masses) ** 0.25


def sample_xi(gamma: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse CDF of the density proportional to exp(2 gamma xi) on [-1, 1]."""
    gamma = np.asarray(gamma, dtype=float)
    u = np.asarray(u, dtype=float)
    a = 2.0 * np.abs(gamma)
    flat = a < _GAMMA_EPS
    a_safe = np.where(flat, 1.0, a)
    # positive-bias branch; negative bias is its mirror image with u -> 1 - u
    uu = np.where(gamma >= 0, u, 1.0 - u)
    xi = 1.0 + np.log(uu + (1.0 - uu) * np.exp(-2.0 * a_safe)) / a_safe
    xi = np.where(gamma >= 0, xi, -xi)
    xi = np.where(flat, 2.0 * u - 1.0, xi)
    return np.clip(xi, -1.0, 1.0)


def tfmc_run(frame: Frame, potential, config: TfmcConfig, hook: StepHook | None = None,
             tag: str = "tfmc", masses: np.ndarray | None = None,
             on_snapshot: Callable[[Frame], Frame] | None = None) -> Trajectory:
    rng = np.random.default_rng(config.seed)
    structure = frame.structure
    m = structure.masses if masses is None else np.asarray(masses, dtype=float)
    x = structure.positions.copy()
    kT = KB * config.temperature
    delta = displacement_scale(m, config.delta_max)[:, None]
    traj = Trajectory(provenance={"engine": "tfmc", "config": config.to_dict()})
    t0 = frame.time
    energy, forces = potential.compute(structure)
    _guard(0, energy, forces, x)

    def snapshot(step):
        fr = Frame(structure.with_positions(x), None, t0 + step * config.time_per_step, f"{tag}/step{step}")
        if on_snapshot is not None:
            fr = on_snapshot(fr)
        traj.frames.append(fr)
        traj.temperatures.append(config.temperature)
        traj.energies.append(float(energy))

    snapshot(0)
    for step in range(1, config.steps + 1):
        gamma = forces * delta / (2.0 * kT)
        xi = sample_xi(gamma, rng.random(size=x.shape))
        disp = xi * delta
        if config.fix_com and len(m) > 1:
            disp -= (m[:, None] * disp).sum(axis=0) / m.sum()
        x = x + disp
        structure = structure.with_positions(x)
        energy, forces = potential.compute(structure)
        _guard(step, energy, forces, x)
        if hook is not None:
            new = hook(step, Frame(structure, None, t0 + step * config.time_per_step, tag))
            if new is not None:
                structure = new.structure
                x = structure.positions.copy()
                m = structure.masses
                delta = displacement_scale(m, config.delta_max)[:, None]
                energy, forces = potential.compute(structure)
        if step % config.snapshot_every == 0:
            snapshot(step)
    return traj

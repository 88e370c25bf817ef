import numpy as np
import pytest

from aloxbench.dynamics.md import MdConfig, instantaneous_temperature, kinetic_energy, maxwell_boltzmann, md_run
from aloxbench.dynamics.scene import bulk_fcc, random_cluster
from aloxbench.dynamics.trajectory import Trajectory
from aloxbench.errors import ConfigError, DataError, SimulationError
from aloxbench.structure import Frame, cluster
from aloxbench.units import KB


class Harmonic:
    """Independent 3-D oscillators about the starting positions."""

    def __init__(self, x0, k=1.0):
        self.x0 = x0.copy()
        self.k = k

    def compute(self, s):
        d = s.positions - self.x0
        return 0.5 * self.k * float(np.sum(d * d)), -self.k * d


class Exploding:
    def compute(self, s):
        return float("nan"), np.zeros((len(s), 3))


def test_short_nve_conserves_energy(oracle):
    s = bulk_fcc(2)
    v = maxwell_boltzmann(s.masses, 300.0, np.random.default_rng(0))
    traj = md_run(Frame(s, v), oracle, MdConfig(dt=0.5, steps=400, snapshot_every=50))
    e = np.array(traj.energies)
    assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-4


def test_snapshots_times_and_tags():
    s = cluster(["Al", "Al"], [[0, 0, 0], [3, 0, 0]])
    traj = md_run(Frame(s, time=10.0), Harmonic(s.positions), MdConfig(dt=0.5, steps=20, snapshot_every=5), tag="t")
    assert [f.tag for f in traj.frames] == [f"t/step{k}" for k in (0, 5, 10, 15, 20)]
    assert np.allclose(traj.times, 10.0 + 0.5 * np.array([0, 5, 10, 15, 20]))
    traj.check()


def test_langevin_is_reproducible_and_seed_dependent():
    s = random_cluster(6, 0, seed=2, box=20.0)
    pot = Harmonic(s.positions)
    cfg = MdConfig(steps=50, thermostat="langevin", temperature=500, friction=0.05, seed=3)
    a = md_run(Frame(s), pot, cfg)
    b = md_run(Frame(s), pot, cfg)
    c = md_run(Frame(s), pot, MdConfig(steps=50, thermostat="langevin", temperature=500, friction=0.05, seed=4))
    assert np.array_equal(a[-1].structure.positions, b[-1].structure.positions)
    assert not np.array_equal(a[-1].structure.positions, c[-1].structure.positions)


def test_non_finite_forces_abort_with_step():
    s = cluster(["Al", "Al"], [[0, 0, 0], [3, 0, 0]])
    with pytest.raises(SimulationError, match="step 0"):
        md_run(Frame(s), Exploding(), MdConfig(steps=5))


def test_hook_can_replace_state():
    s = cluster(["Al", "Al"], [[0, 0, 0], [3, 0, 0]])
    seen = []

    def hook(step, fr):
        seen.append(step)
        return None

    md_run(Frame(s), Harmonic(s.positions), MdConfig(steps=7), hook=hook)
    assert seen == list(range(1, 8))


def test_maxwell_boltzmann_temperature():
    m = np.full(20000, 26.98)
    v = maxwell_boltzmann(m, 800.0, np.random.default_rng(1))
    assert instantaneous_temperature(m, v) == pytest.approx(800.0, rel=0.02)
    assert np.allclose((m[:, None] * v).sum(axis=0), 0.0, atol=1e-9)
    assert kinetic_energy(m, v) == pytest.approx(1.5 * 20000 * KB * instantaneous_temperature(m, v))


def test_config_validation():
    with pytest.raises(ConfigError):
        MdConfig(dt=0)
    with pytest.raises(ConfigError):
        MdConfig(thermostat="berendsen")


def test_trajectory_round_trip_and_time_check(tmp_path):
    s = cluster(["Al", "O"], [[0, 0, 0], [2, 0, 0]])
    traj = md_run(Frame(s), Harmonic(s.positions), MdConfig(steps=10, snapshot_every=2))
    traj.save(tmp_path / "t", shard_size=2)
    back = Trajectory.load(tmp_path / "t")
    assert len(back) == len(traj)
    assert np.allclose(back.times, traj.times)
    assert back.energies == traj.energies
    bad = Trajectory([traj[1], traj[0]])
    with pytest.raises(DataError):
        bad.check()

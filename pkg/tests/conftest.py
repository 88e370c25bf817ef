import numpy as np
import pytest

from aloxbench.dynamics.scene import random_cluster
from aloxbench.oracle import PairPotential
from aloxbench.structure import Structure


@pytest.fixture(scope="session")
def oracle():
    return PairPotential()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_structure(rng, n=12, box=9.0, pbc=(True, True, True), min_dist=1.2, n_o=None):
    """Random Al/O structure with a minimum separation (rejection sampled)."""
    cell = np.eye(3) * box
    pos = []
    while len(pos) < n:
        p = rng.random(3) * box
        if pos:
            d = np.array(pos) - p
            if any(pbc):
                d -= box * np.round(d / box)
            if np.min(np.linalg.norm(d, axis=1)) < min_dist:
                continue
        pos.append(p)
    n_o = n // 2 if n_o is None else n_o
    species = [1] * n_o + [0] * (n - n_o)
    return Structure(cell, species, np.array(pos), pbc)


def small_cluster(seed, n_al=10, n_o=6):
    return random_cluster(n_al, n_o, seed=seed, box=20.0)


def tiny_config(**loop):
    """A run configuration small enough for an iteration to take a couple of seconds."""
    from aloxbench.committee import CommitteeConfig
    from aloxbench.descriptors.soap import SoapParams
    from aloxbench.dynamics.explore import ExploreProtocol
    from aloxbench.dynamics.scene import SceneSpec
    from aloxbench.loop import LoopConfig, RunConfig, SeedProtocol, SeedSpec

    base = dict(temperature_ladder=(300.0, 1500.0), max_iterations=5, max_candidates_per_iter=6,
                eps_lo=0.05, eps_hi=5.0)
    base.update(loop)
    return RunConfig(
        loop=LoopConfig(**base),
        committee=CommitteeConfig(K=3),
        soap=SoapParams(n_max=4, l_max=3),
        explore=ExploreProtocol(n_snapshots=5, snapshot_every=4),
        scenes=(SceneSpec(particle_radius=3.0, box_length=14.0, n_O2=1),),
        seed_protocol=SeedProtocol(steps=60, snapshot_every=20, systems=(
            SeedSpec("bulk_fcc", n_cells=2), SeedSpec("cluster", box=12.0, n_al=3, n_o=3, seed=1))),
    )


ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record an acceptance outcome; the line is printed now and again in the terminal summary."""

    def record(name: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} {name}: {detail}"
        print(line)
        ACCEPTANCE_RESULTS.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

import numpy as np
import pytest

from aloxbench.committee import CommitteeConfig, train_committee
from aloxbench.dataset import Dataset
from aloxbench.descriptors.acsf import AcsfParams
from aloxbench.dynamics.explore import ExploreProtocol, explore, leg_seed, run_leg
from aloxbench.dynamics.md import MdConfig, md_run
from aloxbench.dynamics.replenish import ReplenishPolicy
from aloxbench.dynamics.scene import SceneSpec, build_scene
from aloxbench.errors import ConfigError
from aloxbench.oracle import label_frames


@pytest.fixture(scope="module")
def setup():
    from aloxbench.oracle import PairPotential

    pot = PairPotential()
    scene = build_scene(SceneSpec(particle_radius=4.0, box_length=18.0, n_O2=1, seed=1), pot)
    traj = md_run(scene, pot, MdConfig(steps=200, thermostat="langevin", temperature=800, snapshot_every=20))
    labeled, _ = label_frames(traj.frames, potential=pot)
    committee = train_committee(labeled, AcsfParams(), CommitteeConfig(K=3))
    return committee, scene


def test_snapshots_are_annotated(setup):
    committee, scene = setup
    proto = ExploreProtocol(n_snapshots=4, snapshot_every=3, seed=2)
    res = explore(committee, [scene], (300.0, 900.0), proto)
    assert len(res.legs) == 2 and not res.failed
    assert len(res.frames) == 8
    for f in res.frames:
        assert {"epsilon_f", "temperature", "engine", "step", "scene"} <= set(f.annotations)
        assert f.annotations["epsilon_f"] >= 0
    assert res.frames[0].tag.startswith("explore/s0/T300/md")


def test_leg_results_do_not_depend_on_order(setup):
    committee, scene = setup
    proto = ExploreProtocol(n_snapshots=3, snapshot_every=2, seed=7)
    full = explore(committee, [scene], (300.0, 900.0), proto)
    alone = run_leg(committee, scene, 0, 900.0, 1, proto)
    assert np.array_equal(full.legs[1].trajectory[-1].structure.positions, alone.trajectory[-1].structure.positions)
    assert leg_seed(7, 0, 1) != leg_seed(7, 1, 0)


def test_alternating_engines(setup):
    committee, scene = setup
    proto = ExploreProtocol(engine="alternating", n_snapshots=2, snapshot_every=2)
    res = explore(committee, [scene], (300.0, 600.0, 900.0), proto)
    assert [leg.engine for leg in res.legs] == ["md", "tfmc", "md"]


def test_failed_leg_is_recorded_not_fatal(setup):
    committee, scene = setup

    class Broken(type(committee)):
        pass

    import copy

    bad = copy.deepcopy(committee)
    bad.members[0].weights[:] = np.nan
    proto = ExploreProtocol(n_snapshots=2, snapshot_every=1)
    res = explore(bad, [scene, scene], (300.0,), proto)
    assert len(res.failed) == 2
    assert res.failed[0].error.startswith("simulation-error")


def test_replenishment_during_exploration(setup):
    committee, scene = setup
    proto = ExploreProtocol(n_snapshots=3, snapshot_every=2, replenish=ReplenishPolicy(target_n_O2=3, period=2))
    res = explore(committee, [scene], (300.0,), proto)
    assert len(res.frames[-1].structure) == len(scene.structure) + 4


def test_protocol_validation_and_round_trip():
    with pytest.raises(ConfigError):
        ExploreProtocol(engine="x")
    p = ExploreProtocol(replenish=ReplenishPolicy())
    assert ExploreProtocol.from_dict(p.to_dict()) == p
    assert p.steps == 99 * 10

"""Initial dataset: short oracle-driven NVT runs of small reference systems."""

from __future__ import annotations

from aloxbench.dataset import Dataset
from aloxbench.dynamics.explore import leg_seed
from aloxbench.dynamics.md import MdConfig, md_run
from aloxbench.dynamics.scene import bulk_fcc, random_cluster, random_packing
from aloxbench.loop.config import SeedProtocol, SeedSpec
from aloxbench.oracle import PairPotential, label_frames
from aloxbench.structure import Frame, Structure


def seed_structure(spec: SeedSpec, oracle: PairPotential) -> Structure:
    if spec.kind == "bulk_fcc":
        return bulk_fcc(spec.n_cells)
    if spec.kind == "oxide":
        return random_packing(spec.box, spec.n_al, spec.n_o, seed=spec.seed, potential=oracle)
    return random_cluster(spec.n_al, spec.n_o, seed=spec.seed, box=spec.box)


def seed_dataset(scenes, oracle: PairPotential, protocol: SeedProtocol, temperatures,
                 seed: int = 0) -> Dataset:
    """Label ``steps // snapshot_every`` snapshots per (scene, temperature) leg.

    The starting frame is not stored; snapshots are tagged ``seed/s{i}/T{T}/step{n}``.
    """
    frames = []
    for si, scene in enumerate(scenes):
        start = scene if isinstance(scene, Frame) else Frame(scene)
        for ti, T in enumerate(temperatures):
            cfg = MdConfig(dt=protocol.dt, steps=protocol.steps, thermostat="langevin", temperature=T,
                           friction=protocol.friction, seed=leg_seed(seed, si, ti),
                           snapshot_every=protocol.snapshot_every)
            init = Frame(start.structure, None, 0.0, "seed")
            traj = md_run(init, oracle, cfg, tag=f"seed/s{si}/T{T:g}")
            frames.extend(traj.frames[1:])
    labeled, _rejected = label_frames(frames, potential=oracle)
    ds = Dataset()
    ds.append(labeled, note="seed")
    return ds

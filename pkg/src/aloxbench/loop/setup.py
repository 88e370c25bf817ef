"""Workspace initialisation: seed data, scenes and an optional fixed benchmark set."""

from __future__ import annotations

from aloxbench.committee import CommitteeConfig
from aloxbench.dataset import Dataset
from aloxbench.dynamics.explore import ExploreProtocol, leg_seed
from aloxbench.dynamics.md import MdConfig, md_run
from aloxbench.dynamics.scene import SceneSpec, build_scene
from aloxbench.loop.config import LoopConfig, RunConfig, SeedProtocol, SeedSpec
from aloxbench.loop.seed import seed_dataset, seed_structure
from aloxbench.loop.workspace import Workspace
from aloxbench.oracle import PairPotential, PairPotentialParams, label_frames


def benchmark_dataset(scenes, oracle, temperatures, steps: int, every: int = 100, seed: int = 0) -> Dataset:
    """Oracle Langevin MD from each scene at each temperature, snapshots labeled."""
    frames = []
    for si, scene in enumerate(scenes):
        for ti, T in enumerate(temperatures):
            mc = MdConfig(steps=steps, thermostat="langevin", temperature=T,
                          seed=leg_seed(seed + 1, si, ti), snapshot_every=every)
            frames.extend(md_run(scene, oracle, mc, tag=f"benchmark/s{si}/T{T:g}").frames[1:])
    labeled, _ = label_frames(frames, potential=oracle)
    ds = Dataset()
    ds.append(labeled, note="benchmark")
    return ds


def init_workspace(root, config: RunConfig, oracle: PairPotential | None = None, seed_data: bool = True,
                   benchmark_steps: int = 0, benchmark_every: int = 100) -> Workspace:
    if oracle is None:
        oracle = PairPotential(PairPotentialParams.load(config.oracle_params) if config.oracle_params else None)
    sp = config.seed_protocol
    temps = sp.temperatures or config.loop.temperature_ladder
    ds = Dataset()
    if seed_data:
        ds = seed_dataset([seed_structure(s, oracle) for s in sp.systems], oracle, sp, temps, seed=config.loop.seed)
    scenes = [build_scene(spec, oracle) for spec in config.scenes]
    bench = None
    if benchmark_steps > 0:
        bench = benchmark_dataset(scenes, oracle, config.loop.temperature_ladder, benchmark_steps,
                                  benchmark_every, config.loop.seed)
    return Workspace.create(root, config, oracle.params, dataset=ds, benchmark=bench, scenes=scenes)


def toy_run_config(seed: int = 0, max_iterations: int = 10) -> RunConfig:
    """Small configuration that runs a full loop on one CPU in about a minute per iteration.

    The failure threshold is wide because the toy oracle makes early committees
    disagree by more than 1 eV/angstrom on the particle scene; with the default
    threshold every frame would be discarded as failed and nothing would be learned.
    """
    ladder = (300.0, 1000.0, 2000.0)
    return RunConfig(
        loop=LoopConfig(temperature_ladder=ladder, max_iterations=max_iterations, max_candidates_per_iter=60,
                        eps_lo=0.12, eps_hi=3.0, seed=seed),
        committee=CommitteeConfig(K=4),
        explore=ExploreProtocol(n_snapshots=60, snapshot_every=10),
        scenes=(SceneSpec(particle_radius=7.0, box_length=24.0, n_O2=4),),
        seed_protocol=SeedProtocol(steps=300, snapshot_every=50, systems=(
            SeedSpec("bulk_fcc", n_cells=3), SeedSpec("cluster", box=16.0, n_al=4, n_o=4, seed=3))),
    )

"""Command-line entry point.

Errors exit with status 1 and a single ``category: message`` line on stderr;
usage errors exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from aloxbench.errors import AloxError

log = logging.getLogger("aloxbench")

DEFAULT_HOST = "127.0.0.1"
HOST_ENV = "ALOXBENCH_HOST"


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aloxbench", description="Active-learning toolkit for Al/O reactive simulations")
    p.add_argument("--config", help="run configuration (JSON)")
    p.add_argument("--workspace", default=".", help="loop workspace directory")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--oracle-params", help="oracle pair-parameter file (JSON)")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("init", help="create a loop workspace and its seed dataset")
    s.add_argument("--no-seed", action="store_true", help="leave the dataset empty")
    s.add_argument("--benchmark-steps", type=int, default=0,
                   help="oracle MD steps per ladder temperature for a fixed benchmark set (0: none)")
    s.add_argument("--benchmark-every", type=int, default=100)

    s = sub.add_parser("build-scene", help="build a nanoparticle scene")
    s.add_argument("--out", required=True, help="output .xyz")
    s.add_argument("--radius", type=float)
    s.add_argument("--shell", type=float)
    s.add_argument("--n-o2", type=int)
    s.add_argument("--box", type=float)

    for name in ("md", "tfmc"):
        s = sub.add_parser(name, help=f"run {'molecular dynamics' if name == 'md' else 'force-biased Monte Carlo'}")
        s.add_argument("--in", dest="input", required=True, help="starting frame (.xyz)")
        s.add_argument("--out", required=True, help="trajectory directory")
        s.add_argument("--model", help="committee checkpoint; default is the oracle")
        s.add_argument("--steps", type=int, default=1000)
        s.add_argument("--temperature", type=float, default=300.0)
        s.add_argument("--snapshot-every", type=int, default=10)
        if name == "md":
            s.add_argument("--dt", type=float, default=0.5)
            s.add_argument("--thermostat", choices=("none", "langevin"), default="langevin")
            s.add_argument("--friction", type=float, default=0.01)
        else:
            s.add_argument("--delta-max", type=float, default=0.2)

    s = sub.add_parser("explore", help="committee-driven exploration over the temperature ladder")
    s.add_argument("--model", required=True)
    s.add_argument("--scene", action="append", required=True, help="scene .xyz (repeatable)")
    s.add_argument("--out", required=True)

    s = sub.add_parser("train", help="train a committee on a dataset")
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("eval", help="evaluate a committee on a labeled dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", help="write the full evaluation report (JSON)")

    s = sub.add_parser("loop", help="active-learning loop control")
    lsub = s.add_subparsers(dest="loop_command", required=True)
    r = lsub.add_parser("run", help="run iterations up to the next decision")
    r.add_argument("--iterations", type=int, default=1)
    lsub.add_parser("status")
    d = lsub.add_parser("decide")
    d.add_argument("action", choices=("approve", "refine", "abort"))
    d.add_argument("--note", default="")
    d.add_argument("--iteration", type=int)

    s = sub.add_parser("analyze", help="trajectory analysis")
    s.add_argument("--traj", required=True, help="trajectory directory")
    s.add_argument("--out", required=True, help="output table")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--msd", action="store_true")
    g.add_argument("--radial", action="store_true")
    g.add_argument("--slice", action="store_true")
    g.add_argument("--census", action="store_true")
    s.add_argument("--species", choices=("Al", "O"))
    s.add_argument("--window", type=_pair, help="fit window t0,t1 in fs (msd)")
    s.add_argument("--edges", type=_floats, help="radial bin edges in angstrom")
    s.add_argument("--axis", type=int, default=2)
    s.add_argument("--slab", type=_pair, help="slab centre,thickness in angstrom")
    s.add_argument("--spacing", type=float, default=0.5)
    s.add_argument("--sigma", type=float, default=1.0)

    s = sub.add_parser("serve", help="serve the audit API")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--host", help=f"bind address (default ${HOST_ENV} or {DEFAULT_HOST})")
    return p


# helpers -----------------------------------------------------------------------


def _run_config(args):
    from aloxbench.loop.config import RunConfig

    if args.config:
        cfg = RunConfig.load(args.config)
    elif (Path(args.workspace) / "config" / "run.json").exists():
        cfg = RunConfig.load(Path(args.workspace) / "config" / "run.json")
    else:
        cfg = RunConfig()
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, loop=replace(cfg.loop, seed=args.seed))
    if args.oracle_params:
        from dataclasses import replace

        cfg = replace(cfg, oracle_params=args.oracle_params)
    return cfg


def _oracle(args, cfg=None):
    from aloxbench.oracle import PairPotential, PairPotentialParams

    path = args.oracle_params or (cfg.oracle_params if cfg is not None else None)
    return PairPotential(PairPotentialParams.load(path) if path else None)


def _potential(args):
    if getattr(args, "model", None):
        from aloxbench.committee import Committee

        return Committee.load(args.model).mean_potential()
    return _oracle(args, _run_config(args))


def _read_frame(path):
    from aloxbench.dataset import read_xyz
    from aloxbench.structure import LabeledFrame

    fr = read_xyz(path)
    return fr.frame if isinstance(fr, LabeledFrame) else fr


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# commands ------------------------------------------------------------------------


def cmd_init(args) -> int:
    from aloxbench.loop.setup import init_workspace

    cfg = _run_config(args)
    ws = init_workspace(args.workspace, cfg, _oracle(args, cfg), seed_data=not args.no_seed,
                        benchmark_steps=args.benchmark_steps, benchmark_every=args.benchmark_every)
    bench = ws.benchmark()
    _emit({"workspace": str(ws.root), "dataset_size": len(ws.dataset()),
           "benchmark_size": 0 if bench is None else len(bench)})
    return 0


def cmd_build_scene(args) -> int:
    from dataclasses import replace

    from aloxbench.dataset import write_xyz
    from aloxbench.dynamics.scene import SceneSpec, build_scene

    cfg = _run_config(args)
    spec = cfg.scenes[0] if cfg.scenes else SceneSpec()
    over = {"particle_radius": args.radius, "shell_thickness": args.shell, "n_O2": args.n_o2,
            "box_length": args.box}
    spec = replace(spec, **{k: v for k, v in over.items() if v is not None})
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    frame = build_scene(spec, _oracle(args, cfg))
    write_xyz(args.out, frame)
    _emit({"out": args.out, "n_atoms": len(frame.structure), "counts": {"Al": frame.structure.count(0),
                                                                         "O": frame.structure.count(1)}})
    return 0


def cmd_dynamics(args) -> int:
    frame = _read_frame(args.input)
    pot = _potential(args)
    seed = args.seed if args.seed is not None else 0
    if args.command == "md":
        from aloxbench.dynamics.md import MdConfig, md_run

        cfg = MdConfig(dt=args.dt, steps=args.steps, thermostat=args.thermostat, temperature=args.temperature,
                       friction=args.friction, seed=seed, snapshot_every=args.snapshot_every)
        traj = md_run(frame, pot, cfg)
    else:
        from aloxbench.dynamics.tfmc import TfmcConfig, tfmc_run

        cfg = TfmcConfig(temperature=args.temperature, delta_max=args.delta_max, steps=args.steps, seed=seed,
                         snapshot_every=args.snapshot_every)
        traj = tfmc_run(frame, pot, cfg)
    traj.save(args.out)
    _emit({"out": args.out, "n_frames": len(traj)})
    return 0


def cmd_explore(args) -> int:
    from dataclasses import replace

    from aloxbench.committee import Committee
    from aloxbench.dynamics.explore import explore

    cfg = _run_config(args)
    protocol = cfg.explore if args.seed is None else replace(cfg.explore, seed=args.seed)
    committee = Committee.load(args.model)
    result = explore(committee, [_read_frame(p) for p in args.scene], cfg.loop.temperature_ladder, protocol)
    out = Path(args.out)
    legs = []
    for n, leg in enumerate(result.legs):
        entry = {"scene": leg.scene, "temperature": leg.temperature, "engine": leg.engine, "error": leg.error}
        if leg.ok:
            entry["dir"] = f"leg-{n:03d}"
            leg.trajectory.save(out / entry["dir"])
        legs.append(entry)
    out.mkdir(parents=True, exist_ok=True)
    (out / "legs.json").write_text(json.dumps(legs, indent=1, sort_keys=True) + "\n")
    _emit({"out": str(out), "legs": len(legs), "failed": len(result.failed), "frames": len(result.frames)})
    return 0


def cmd_train(args) -> int:
    from dataclasses import replace

    from aloxbench.committee import train_committee
    from aloxbench.dataset import Dataset

    cfg = _run_config(args)
    ds = Dataset.load(args.dataset)
    ccfg = cfg.committee
    if args.seed is not None:
        ccfg = replace(ccfg, seeds=tuple(args.seed + m for m in range(ccfg.K)))
    committee = train_committee(list(ds), cfg.acsf, ccfg, dataset_digest=ds.digest())
    committee.save(args.out)
    _emit({"out": args.out, "members": len(committee.members), "n_frames": len(ds)})
    return 0


def cmd_eval(args) -> int:
    from aloxbench.committee import Committee, evaluate
    from aloxbench.dataset import Dataset

    rep = evaluate(Committee.load(args.model), list(Dataset.load(args.dataset)))
    if args.out:
        Path(args.out).write_text(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
    _emit({"energy_rmse_per_atom": rep.energy_rmse_per_atom, "force_rmse": rep.force_rmse,
           "n_frames": rep.n_frames, "fraction_force_error_below": rep.fraction_force_error_below})
    return 0


def cmd_loop(args) -> int:
    from aloxbench.loop.controller import LoopController

    ctl = LoopController(args.workspace)
    if args.loop_command == "status":
        s = ctl.status()
        _emit({k: s[k] for k in ("phase", "iteration", "converged", "completed_phases", "last_error", "iterations")})
        return 0
    if args.loop_command == "decide":
        _emit(ctl.decide(args.action, args.note, args.iteration))
        return 0
    for n in range(args.iterations):
        rep = ctl.run_iteration()
        _emit({"iteration": rep.iteration, "dataset_size": rep.dataset_size,
               "candidate_fraction": rep.candidate_fraction, "heldout_force_rmse": rep.heldout.force_rmse,
               "converged": rep.converged})
        if n + 1 < args.iterations:
            ctl.decide("refine", "scripted")
            if ctl.state().phase != "Idle":
                break
    return 0


def cmd_analyze(args) -> int:
    from aloxbench.analysis import (density_slice, diffusion_fit, kinetics_series, msd_compute,
                                    radial_profile)
    from aloxbench.analysis.tables import write_table
    from aloxbench.dynamics.trajectory import Trajectory
    from aloxbench.structure import SYMBOL_TO_ID

    traj = Trajectory.load(args.traj)
    species = SYMBOL_TO_ID[args.species] if args.species else None
    if args.msd:
        curve = msd_compute(traj, species=species)
        fit = diffusion_fit(curve, args.window)
        write_table(args.out, ["lag_fs", "msd_A2", "samples"],
                    [[float(t), float(m), int(c)] for t, m, c in zip(curve.lag_times, curve.msd, curve.counts)],
                    {"D_A2_per_fs": fit.D, "slope": fit.slope, "r_squared": fit.r_squared,
                     "ballistic": fit.ballistic, "window_fs": list(fit.window)})
        _emit({"D": fit.D, "ballistic": fit.ballistic, "r_squared": fit.r_squared})
    elif args.radial:
        edges = args.edges or tuple(np.arange(0.0, 15.01, 0.5))
        prof = radial_profile(traj, edges)
        rows = []
        for b in range(len(prof.edges) - 1):
            rows.append([float(prof.edges[b]), float(prof.edges[b + 1]),
                         *[float(x) for x in prof.density[0, :, b]]])
        write_table(args.out, ["r_lo", "r_hi", "rho_Al", "rho_O"], rows,
                    {"center_rule": prof.center_rule, "n_frames": int(prof.n_frames[0])})
        _emit({"bins": len(rows)})
    elif args.slice:
        sl = density_slice(traj.frames, axis=args.axis, slab=args.slab, spacing=args.spacing, sigma=args.sigma)
        rows = [[float(x), float(y), *[float(sl.maps[s, i, j]) for s in range(sl.maps.shape[0])]]
                for i, x in enumerate(sl.x) for j, y in enumerate(sl.y)]
        write_table(args.out, ["x", "y", "rho_Al", "rho_O"], rows,
                    {"axis": sl.axis, "slab_center": sl.slab_center, "slab_thickness": sl.slab_thickness,
                     "undersampled": sl.undersampled})
        _emit({"points": len(rows), "undersampled": sl.undersampled})
    else:
        table = kinetics_series(traj)
        table.write(args.out)
        _emit({"rows": len(table.rows)})
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from aloxbench.service import create_app

    host = args.host or os.environ.get(HOST_ENV, DEFAULT_HOST)
    uvicorn.run(create_app(args.workspace), host=host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "init": cmd_init, "build-scene": cmd_build_scene, "md": cmd_dynamics, "tfmc": cmd_dynamics,
    "explore": cmd_explore, "train": cmd_train, "eval": cmd_eval, "loop": cmd_loop,
    "analyze": cmd_analyze, "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except AloxError as exc:
        print(f"{exc.category}: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Run the toy active-learning loop end to end with scripted refine decisions.

    python3 scripts/run_toy_loop.py --workspace runs/toy --iterations 5 --plots

The last iteration is left at the decision gate so it can be audited with
``aloxbench loop decide`` or the HTTP API (``aloxbench serve``).
"""

from __future__ import annotations

import argparse
import logging
import time

from aloxbench.loop import LoopController, init_workspace, toy_run_config


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--workspace", default="runs/toy")
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--benchmark-steps", type=int, default=2000)
    p.add_argument("--benchmark-every", type=int, default=20)
    p.add_argument("--plots", action="store_true", help="write PNG figures next to the reports (needs matplotlib)")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    t0 = time.perf_counter()
    ws = init_workspace(args.workspace, toy_run_config(seed=args.seed), benchmark_steps=args.benchmark_steps,
                        benchmark_every=args.benchmark_every)
    print(f"workspace {ws.root}: {len(ws.dataset())} seed frames, {len(ws.benchmark() or [])} benchmark frames")
    ctl = LoopController(ws)
    reports = []
    for k in range(args.iterations):
        rep = ctl.run_iteration()
        reports.append(rep)
        ev = rep.benchmark or rep.heldout
        print(f"iter {rep.iteration}: dataset {rep.dataset_size_before} -> {rep.dataset_size}, "
              f"candidates {rep.candidate_fraction:.3f}, failed {rep.failed_fraction:.3f}, "
              f"force RMSE {ev.force_rmse:.4f} eV/A, stop {rep.stop_reason}")
        if k + 1 < args.iterations and not ctl.decide("refine", "scripted")["effective"]:
            break
    print(f"done in {time.perf_counter() - t0:.0f} s; phase {ctl.state().phase}")

    if args.plots:
        from aloxbench.plots import plot_report, plot_rmse_trend

        for rep in reports:
            plot_report(rep, ws.root / "reports" / f"iter-{rep.iteration}.png")
        plot_rmse_trend(reports, ws.root / "reports" / "trend.png")


if __name__ == "__main__":
    main()

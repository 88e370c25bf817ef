"""Oxidation of a bare toy particle under O2 replenishment at two temperatures.

    python3 scripts/kinetics_demo.py --out runs/kinetics --steps 20000

Uses the oracle potential directly, or a trained committee with ``--model``.
Writes one species-census table per temperature and, with ``--plot``, the
cumulative O2 consumption curves.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from aloxbench.analysis.kinetics import kinetics_series
from aloxbench.committee import Committee
from aloxbench.dynamics import ReplenishPolicy, SceneSpec, build_scene, oxidation_run
from aloxbench.oracle import PairPotential


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/kinetics")
    p.add_argument("--model", help="committee checkpoint; default is the oracle")
    p.add_argument("--temperatures", type=float, nargs="+", default=[300.0, 1500.0])
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--radius", type=float, default=5.0)
    p.add_argument("--box", type=float, default=20.0)
    p.add_argument("--n-o2", type=int, default=4)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--plot", action="store_true")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    oracle = PairPotential()
    potential = Committee.load(args.model).mean_potential() if args.model else oracle
    scene = build_scene(SceneSpec(particle_radius=args.radius, box_length=args.box, n_O2=args.n_o2), oracle)
    policy = ReplenishPolicy(target_n_O2=args.n_o2, period=200)
    series = {}
    for T in args.temperatures:
        traj = oxidation_run(scene, potential, T, args.steps, policy, snapshot_every=250, seed=args.seed)
        table = kinetics_series(traj)
        table.write(out / f"kinetics-T{T:g}.txt")
        consumed = table.o2_consumed()
        series[f"{T:g} K"] = ([r.time for r in table.rows], consumed)
        print(f"T = {T:g} K: {consumed[-1]:g} O2 consumed, {len(table.events)} replenishment events")
    if args.plot:
        from aloxbench.plots import plot_consumption

        plot_consumption(series, out / "consumption.png")


if __name__ == "__main__":
    main()

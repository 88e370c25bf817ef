"""Optional figures (needs the ``plot`` extra). matplotlib is imported lazily."""

from __future__ import annotations

import numpy as np

from aloxbench.errors import ConfigError


def _pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ConfigError("plotting needs matplotlib; install aloxbench[plot]") from None
    return plt


def plot_report(report, path) -> None:
    """Force parity and per-atom error histogram of one iteration report."""
    plt = _pyplot()
    ev = report.benchmark or report.heldout
    pairs = np.array(ev.parity_force).reshape(-1, 2)
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 4))
    a.scatter(pairs[:, 0], pairs[:, 1], s=2, alpha=0.5)
    if len(pairs):
        lo, hi = float(pairs.min()), float(pairs.max())
        a.plot([lo, hi], [lo, hi], "k--", lw=0.8)
    a.set_xlabel("oracle force (eV/Å)")
    a.set_ylabel("model force (eV/Å)")
    a.set_title(f"iteration {report.iteration}: RMSE {ev.force_rmse:.3f} eV/Å")
    edges = np.asarray(ev.histogram_edges)
    counts = np.asarray(ev.histogram_counts)
    b.bar(edges[:-1], counts[:-1], width=np.diff(edges), align="edge")
    b.set_xlabel("|ΔF| per atom (eV/Å)")
    b.set_ylabel("atoms")
    b.set_title(f"overflow: {counts[-1]}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rmse_trend(reports, path) -> None:
    plt = _pyplot()
    its = [r.iteration for r in reports]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(its, [r.heldout.force_rmse for r in reports], "o-", label="held-out split")
    if all(r.benchmark is not None for r in reports):
        ax.plot(its, [r.benchmark.force_rmse for r in reports], "s-", label="benchmark")
    ax.plot(its, [r.candidate_fraction for r in reports], "^:", label="candidate fraction")
    ax.set_xlabel("iteration")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_consumption(series: dict, path) -> None:
    """``series`` maps a label to ``(times_fs, cumulative O2 consumed)``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, (t, c) in series.items():
        ax.plot(np.asarray(t) / 1000.0, c, label=label)
    ax.set_xlabel("time (ps)")
    ax.set_ylabel("O₂ consumed")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

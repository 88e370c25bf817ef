"""Radial species distributions about the particle centre."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from aloxbench.errors import ConfigError, DataError
from aloxbench.geometry import build_neighbor_list, minimum_image_many
from aloxbench.structure import AL, SPECIES, Frame


@dataclass(frozen=True, eq=False)
class RadialProfile:
    edges: np.ndarray
    windows: list  # [(t_lo, t_hi)]
    counts: np.ndarray  # (W, S, B) mean atoms per frame
    density: np.ndarray  # (W, S, B) atoms per cubic angstrom
    n_frames: np.ndarray  # (W,)
    center_rule: str


def _periodic_mean(s, pts: np.ndarray) -> np.ndarray:
    return pts[0] + minimum_image_many(s.cell, s.pbc, pts - pts[0]).mean(axis=0)


def particle_center(frame: Frame, rule: str = "all-al", r_alal: float = 3.4) -> np.ndarray:
    s = frame.structure
    al = np.nonzero(s.species_ids == AL)[0]
    if rule not in ("all-al", "cluster"):
        raise ConfigError(f"unknown center rule {rule!r}")
    if not len(al):
        raise DataError("no Al atoms to define the particle centre")
    if rule == "cluster" and len(al) > 1:
        nl = build_neighbor_list(s, r_alal)
        keep = (s.species_ids[nl.i] == AL) & (s.species_ids[nl.j] == AL)
        n = len(s)
        g = coo_matrix((np.ones(int(keep.sum())), (nl.i[keep], nl.j[keep])), shape=(n, n))
        _, labels = connected_components(g, directed=False)
        lab = labels[al]
        sizes = np.bincount(lab)
        best = max(np.unique(lab), key=lambda c: (sizes[c], -al[lab == c].min()))
        al = al[lab == best]
    return _periodic_mean(s, s.positions[al])


def radial_profile(trajectory, edges, windows=None, center_rule: str = "all-al") -> RadialProfile:
    """Per time window, mean per-frame histogram of distances from the frame's centre."""
    frames = list(trajectory)
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise ConfigError("bin edges must be increasing and nonnegative")
    times = np.array([f.time for f in frames])
    if windows is None:
        windows = [(float(times.min()), float(times.max()))]
    S, B = len(SPECIES), len(edges) - 1
    counts = np.zeros((len(windows), S, B))
    n_frames = np.zeros(len(windows), dtype=int)
    shell = 4.0 / 3.0 * np.pi * (edges[1:] ** 3 - edges[:-1] ** 3)
    for w, (lo, hi) in enumerate(windows):
        for fr in frames:
            if not (lo <= fr.time <= hi):
                continue
            s = fr.structure
            c = particle_center(fr, center_rule)
            r = np.linalg.norm(minimum_image_many(s.cell, s.pbc, s.positions - c), axis=1)
            for sp in range(S):
                h, _ = np.histogram(r[s.species_ids == sp], bins=edges)
                # histogram closes the last bin; keep [lo, hi) semantics
                h[-1] -= int(np.sum(r[s.species_ids == sp] == edges[-1]))
                counts[w, sp] += h
            n_frames[w] += 1
        if n_frames[w]:
            counts[w] /= n_frames[w]
    return RadialProfile(edges, list(windows), counts, counts / shell[None, None, :], n_frames, center_rule)

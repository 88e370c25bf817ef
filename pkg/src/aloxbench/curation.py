"""Furthest-point sampling, near-duplicate filtering and PCA maps over fingerprints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aloxbench.analysis.tables import write_table
from aloxbench.descriptors.soap import pairwise_distances
from aloxbench.errors import ConfigError, DataError

DEFAULT_D_MIN = 0.05


@dataclass(frozen=True, eq=False)
class FpsResult:
    indices: np.ndarray
    min_distances: np.ndarray  # distance to the selected set at pick time; inf for the first


def _distances(a, b, metric: str) -> np.ndarray:
    if metric == "chord":
        return pairwise_distances(a, b)
    if metric == "euclidean":
        a, b = np.atleast_2d(a), np.atleast_2d(b)
        if a.shape[1] != b.shape[1]:
            raise DataError("dimension mismatch")
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    raise ConfigError(f"unknown metric {metric!r}")


def fps_select(fingerprints, m: int, start: int | str = 0, metric: str = "chord") -> FpsResult:
    """Greedy max-min selection; ties go to the lowest index."""
    X = np.atleast_2d(np.asarray(fingerprints, dtype=float))
    n = len(X)
    if n == 0:
        raise DataError("no fingerprints to select from")
    if m < 1:
        raise ConfigError("m must be >= 1")
    m = min(m, n)
    if start == "max-norm-from-centroid":
        c = X - X.mean(axis=0)
        first = int(np.argmax(np.einsum("ij,ij->i", c, c)))
    else:
        first = int(start)
        if not 0 <= first < n:
            raise ConfigError("start index out of range")
    picks = [first]
    mins = [np.inf]
    mind = _distances(X, X[first:first + 1], metric)[:, 0]
    taken = np.zeros(n, dtype=bool)
    taken[first] = True
    for _ in range(1, m):
        score = np.where(taken, -np.inf, mind)
        nxt = int(np.argmax(score))
        picks.append(nxt)
        mins.append(float(mind[nxt]))
        taken[nxt] = True
        mind = np.minimum(mind, _distances(X, X[nxt:nxt + 1], metric)[:, 0])
    return FpsResult(np.array(picks, dtype=np.int64), np.array(mins))


def dedup_candidates(existing, candidates, d_min: float = DEFAULT_D_MIN, metric: str = "chord") -> np.ndarray:
    """Candidate indices kept by a greedy pass: strictly farther than ``d_min`` from
    every existing fingerprint and every previously kept candidate."""
    if d_min < 0:
        raise ConfigError("d_min must be >= 0")
    C = np.atleast_2d(np.asarray(candidates, dtype=float))
    if C.size == 0:
        return np.zeros(0, dtype=np.int64)
    E = np.asarray(existing, dtype=float)
    if E.size:
        E = np.atleast_2d(E)
        if E.shape[1] != C.shape[1]:
            raise DataError(f"fingerprint dimension mismatch: {E.shape[1]} vs {C.shape[1]}")
        ok = _distances(C, E, metric).min(axis=1) > d_min
    else:
        ok = np.ones(len(C), dtype=bool)
    kept: list[int] = []
    for k in range(len(C)):
        if not ok[k]:
            continue
        if kept and _distances(C[k:k + 1], C[kept], metric).min() <= d_min:
            continue
        kept.append(k)
    return np.array(kept, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class PcaMap:
    mean: np.ndarray
    axes: np.ndarray  # (k, D), orthonormal rows
    explained_variance_ratio: np.ndarray
    coords: np.ndarray  # (M, k)
    color: np.ndarray | None = None
    tags: list | None = None

    def to_dict(self) -> dict:
        """Compact form for reports: coordinates, colour and tags (axes omitted)."""
        return {
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "coords": self.coords.tolist(),
            "color": None if self.color is None else self.color.tolist(),
            "tags": self.tags,
        }

    def write(self, path) -> None:
        k = self.coords.shape[1]
        cols = [f"PC{j + 1}" for j in range(k)] + ["color_eV_per_atom", "tag"]
        color = self.color if self.color is not None else np.full(len(self.coords), np.nan)
        tags = self.tags or [str(i) for i in range(len(self.coords))]
        rows = [[*map(float, self.coords[i]), float(color[i]), tags[i] or "-"] for i in range(len(self.coords))]
        write_table(path, cols, rows, {"explained_variance_ratio": self.explained_variance_ratio.tolist()})


def pca_fit_project(vectors, k: int = 2, color=None, tags=None) -> PcaMap:
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    M, D = X.shape
    if k > D:
        raise ConfigError(f"k={k} exceeds vector dimension {D}")
    if M < k + 1:
        raise ConfigError(f"PCA with k={k} needs at least {k + 1} vectors")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    var = s**2
    total = var.sum()
    axes = vt[:k].copy()
    if axes.shape[0] < k:
        raise ConfigError("not enough samples for the requested number of components")
    for j in range(k):
        lead = int(np.argmax(np.abs(axes[j])))
        if axes[j, lead] < 0:
            axes[j] = -axes[j]
    ratio = var[:k] / total if total > 0 else np.zeros(k)
    coords = Xc @ axes.T
    col = None if color is None else np.asarray(color, dtype=float)
    return PcaMap(mean, axes, ratio, coords, col, None if tags is None else list(tags))

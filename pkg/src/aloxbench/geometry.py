"""Periodic geometry: minimum-image displacements and neighbor tables."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from aloxbench.errors import DataError, GeometryError
from aloxbench.structure import Structure

BRUTE_FORCE_MAX_ATOMS = 500

_IMAGE_OFFSETS = np.array(list(itertools.product((-1, 0, 1), repeat=3)), dtype=float)


def _inverse(cell: np.ndarray) -> np.ndarray:
    try:
        inv = np.linalg.inv(cell)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("singular cell") from exc
    if not np.all(np.isfinite(inv)) or abs(np.linalg.det(cell)) < 1e-12:
        raise GeometryError("singular cell")
    return inv


def _is_diagonal(cell: np.ndarray) -> bool:
    return bool(np.all(cell == np.diag(np.diag(cell))))


def minimum_image_many(cell, pbc, d: np.ndarray, inv: np.ndarray | None = None) -> np.ndarray:
    """Shortest periodic images of raw displacement vectors ``d`` (shape (P, 3))."""
    d = np.asarray(d, dtype=float)
    mask = np.asarray(pbc, dtype=bool)
    if not mask.any():
        return d.copy()
    cell = np.asarray(cell, dtype=float)
    if inv is None:
        inv = _inverse(cell)
    frac = d @ inv
    frac[..., mask] -= np.round(frac[..., mask])
    out = frac @ cell
    if _is_diagonal(cell):
        return out
    # skewed cells: rounding can miss the true minimum, scan neighbouring images
    offsets = _IMAGE_OFFSETS * mask
    shifts = offsets @ cell  # (27, 3)
    cand = out[..., None, :] + shifts  # (P, 27, 3)
    best = np.argmin(np.einsum("...kx,...kx->...k", cand, cand), axis=-1)
    return np.take_along_axis(cand, best[..., None, None], axis=-2)[..., 0, :]


def minimum_image(cell, r_i, r_j, pbc=(True, True, True)) -> np.ndarray:
    """Displacement from ``r_i`` to the nearest periodic image of ``r_j``."""
    d = np.asarray(r_j, dtype=float) - np.asarray(r_i, dtype=float)
    return minimum_image_many(cell, pbc, d[None, :])[0]


def cell_heights(cell) -> np.ndarray:
    cell = np.asarray(cell, dtype=float)
    vol = abs(np.linalg.det(cell))
    crosses = np.array([
        np.linalg.norm(np.cross(cell[1], cell[2])),
        np.linalg.norm(np.cross(cell[2], cell[0])),
        np.linalg.norm(np.cross(cell[0], cell[1])),
    ])
    return vol / crosses


@dataclass(frozen=True, eq=False)
class NeighborTable:
    """Directed neighbor pairs stored flat and sorted by (i, j).

    Every unordered pair appears twice, once from each side, with negated
    displacement. ``disp[p]`` points from atom ``i[p]`` to (an image of) ``j[p]``.
    """

    cutoff: float
    n_atoms: int
    i: np.ndarray
    j: np.ndarray
    disp: np.ndarray
    dist: np.ndarray

    def __len__(self) -> int:
        return len(self.i)

    def neighbors(self, atom: int) -> list[tuple[int, np.ndarray, float]]:
        lo, hi = np.searchsorted(self.i, [atom, atom + 1])
        return [(int(self.j[p]), self.disp[p], float(self.dist[p])) for p in range(lo, hi)]

    def counts(self) -> np.ndarray:
        return np.bincount(self.i, minlength=self.n_atoms)

    def pair_set(self, decimals: int = 8) -> set:
        return {
            (int(a), int(b), tuple(np.round(v, decimals)))
            for a, b, v in zip(self.i, self.j, self.disp)
        }


def _needs_images(structure: Structure, cutoff: float) -> bool:
    mask = np.array(structure.pbc)
    if not mask.any():
        return False
    return bool(np.any(cell_heights(structure.cell)[mask] < 2.0 * cutoff))


def _finish(cutoff, n, i, j, disp, dist) -> NeighborTable:
    order = np.lexsort((disp[:, 2], disp[:, 1], disp[:, 0], j, i))
    return NeighborTable(
        float(cutoff), n, i[order].astype(np.int64), j[order].astype(np.int64),
        disp[order], dist[order],
    )


def _pairs_brute_force(structure: Structure, cutoff: float):
    pos = structure.positions
    n = len(pos)
    iu, ju = np.triu_indices(n, k=1)
    d = minimum_image_many(structure.cell, structure.pbc, pos[ju] - pos[iu])
    r = np.sqrt(np.einsum("ij,ij->i", d, d))
    keep = r <= cutoff
    iu, ju, d, r = iu[keep], ju[keep], d[keep], r[keep]
    return (np.concatenate([iu, ju]), np.concatenate([ju, iu]),
            np.concatenate([d, -d]), np.concatenate([r, r]))


def _pairs_images(structure: Structure, cutoff: float):
    """Image replication + k-d tree; exact for any cutoff and cell shape."""
    pos = structure.positions
    n = len(pos)
    mask = np.array(structure.pbc)
    cell = structure.cell
    if mask.any():
        inv = _inverse(cell)
        frac = pos @ inv
        frac[:, mask] -= np.floor(frac[:, mask])
        wrapped = frac @ cell
        reach = np.where(mask, np.ceil(cutoff / cell_heights(cell)).astype(int), 0)
    else:
        wrapped = pos.copy()
        reach = np.zeros(3, dtype=int)
    ranges = [range(-k, k + 1) for k in reach]
    shifts = np.array(list(itertools.product(*ranges)), dtype=float) @ cell
    images = (wrapped[None, :, :] + shifts[:, None, :]).reshape(-1, 3)
    image_atom = np.tile(np.arange(n), len(shifts))
    tree_images = cKDTree(images)
    tree_home = cKDTree(wrapped)
    sdm = tree_home.sparse_distance_matrix(tree_images, cutoff, output_type="ndarray")
    i = sdm["i"].astype(np.int64)
    k = sdm["j"].astype(np.int64)
    j = image_atom[k]
    d = images[k] - wrapped[i]
    r = np.sqrt(np.einsum("ij,ij->i", d, d))
    keep = ~((i == j) & (r < 1e-12))
    keep &= r <= cutoff
    return i[keep], j[keep], d[keep], r[keep]


def build_neighbor_list(structure: Structure, cutoff: float, method: str = "auto") -> NeighborTable:
    """All directed pairs within ``cutoff`` (inclusive).

    ``method`` is ``"auto"``, ``"brute"`` (minimum image, O(N^2)) or ``"tree"``.
    Brute force is only valid when the cutoff fits inside half the cell height.
    """
    if not cutoff > 0:
        raise DataError("cutoff must be positive")
    pos = structure.positions
    if not np.all(np.isfinite(pos)):
        raise DataError("non-finite positions")
    n = len(pos)
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return NeighborTable(float(cutoff), 0, empty, empty, np.zeros((0, 3)), np.zeros(0))
    images = _needs_images(structure, cutoff)
    if method == "auto":
        method = "tree" if images or n >= BRUTE_FORCE_MAX_ATOMS else "brute"
    if method == "brute":
        if images:
            raise GeometryError("cutoff exceeds half the cell height; use the image path")
        parts = _pairs_brute_force(structure, cutoff)
    elif method == "tree":
        parts = _pairs_images(structure, cutoff)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _finish(cutoff, n, *parts)


def distance_matrix(structure: Structure) -> np.ndarray:
    """Minimum-image distance matrix; O(N^2) memory, meant for small checks."""
    pos = structure.positions
    d = pos[None, :, :] - pos[:, None, :]
    d = minimum_image_many(structure.cell, structure.pbc, d.reshape(-1, 3)).reshape(d.shape)
    return np.sqrt(np.einsum("ijk,ijk->ij", d, d))

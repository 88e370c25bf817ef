"""Gaussian-smoothed cross-sectional number densities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aloxbench.errors import ConfigError
from aloxbench.structure import SPECIES


@dataclass(frozen=True, eq=False)
class DensitySlice:
    axis: int
    slab_center: float
    slab_thickness: float
    spacing: float
    sigma: float
    x: np.ndarray  # grid-point coordinates along the first in-plane axis
    y: np.ndarray
    maps: np.ndarray  # (S, nx, ny) atoms per square angstrom, frame-averaged
    counts: np.ndarray  # (S,) mean atoms in the slab per frame
    undersampled: bool

    @property
    def cell_area(self) -> float:
        return self.spacing * self.spacing


def _plane_axes(axis: int) -> tuple[int, int]:
    return tuple(k for k in range(3) if k != axis)  # type: ignore[return-value]


def _wrap_delta(d, length, periodic):
    return d - length * np.round(d / length) if periodic else d


def density_slice(frames, axis: int = 2, slab: tuple[float, float] | None = None,
                  spacing: float = 0.5, sigma: float = 1.0) -> DensitySlice:
    """Deposit atoms with ``|coord - center| <= thickness/2`` as normalised 2-D Gaussians.

    The grid covers the orthorhombic cell extent of the two in-plane axes with
    points at ``(k + 0.5) * spacing``. Periodic in-plane axes use minimum-image
    distances to the grid points.
    """
    frames = list(frames)
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    if axis not in (0, 1, 2):
        raise ConfigError("axis must be 0, 1 or 2")
    cell = frames[0].structure.cell
    lengths = np.diag(cell)
    if slab is None:
        slab = (0.5 * lengths[axis], 2.0 * sigma)
    center, thickness = slab
    if thickness <= 0:
        raise ConfigError("slab thickness must be positive")
    a, b = _plane_axes(axis)
    nx = max(1, int(np.ceil(lengths[a] / spacing)))
    ny = max(1, int(np.ceil(lengths[b] / spacing)))
    gx = (np.arange(nx) + 0.5) * spacing
    gy = (np.arange(ny) + 0.5) * spacing
    S = len(SPECIES)
    maps = np.zeros((S, nx, ny))
    counts = np.zeros(S)
    norm = 1.0 / (2.0 * np.pi * sigma * sigma)
    for fr in frames:
        s = fr.structure
        pos = s.positions
        dz = _wrap_delta(pos[:, axis] - center, lengths[axis], s.pbc[axis])
        inside = np.abs(dz) <= 0.5 * thickness
        for sp in range(S):
            sel = inside & (s.species_ids == sp)
            if not sel.any():
                continue
            p = pos[sel]
            dx = _wrap_delta(gx[None, :] - p[:, a][:, None], lengths[a], s.pbc[a])
            dy = _wrap_delta(gy[None, :] - p[:, b][:, None], lengths[b], s.pbc[b])
            ex = np.exp(-dx * dx / (2 * sigma * sigma))
            ey = np.exp(-dy * dy / (2 * sigma * sigma))
            maps[sp] += norm * np.einsum("mi,mj->ij", ex, ey)
            counts[sp] += sel.sum()
    maps /= len(frames)
    counts /= len(frames)
    return DensitySlice(axis, float(center), float(thickness), float(spacing), float(sigma),
                        gx, gy, maps, counts, bool(spacing > 3.0 * sigma))

"""Mean squared displacement and Einstein-relation diffusion fits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from aloxbench.errors import DataError, FitError
from aloxbench.geometry import minimum_image_many


@dataclass(frozen=True, eq=False)
class MsdCurve:
    lag_times: np.ndarray  # fs
    msd: np.ndarray  # angstrom^2
    counts: np.ndarray  # (origin, atom) samples per lag
    species: int | None = None


@dataclass(frozen=True)
class DiffusionResult:
    D: float | None  # angstrom^2 / fs; None when the slope is negative
    slope: float
    intercept: float
    window: tuple[float, float]
    r_squared: float
    ballistic: bool
    quadratic_fraction: float

    @property
    def valid(self) -> bool:
        return self.D is not None and not self.ballistic


def unwrap_positions(trajectory, atoms: np.ndarray | None = None) -> np.ndarray:
    """(T, N, 3) positions made continuous by per-step minimum-image increments.

    Only atoms present in the first frame are tracked (insertions append atoms).
    """
    frames = list(trajectory)
    if len(frames) < 1:
        raise DataError("empty trajectory")
    n0 = len(frames[0])
    idx = np.arange(n0) if atoms is None else np.asarray(atoms)
    s0 = frames[0].structure
    out = np.empty((len(frames), len(idx), 3))
    out[0] = s0.positions[idx]
    for t in range(1, len(frames)):
        cur = frames[t].structure.positions[idx]
        prev = frames[t - 1].structure.positions[idx]
        step = minimum_image_many(s0.cell, s0.pbc, cur - prev)
        out[t] = out[t - 1] + step
    return out


def _check_spacing(times: np.ndarray) -> float:
    if len(times) < 2:
        raise DataError("MSD needs at least two frames")
    dts = np.diff(times)
    dt = dts[0]
    if dt <= 0 or not np.allclose(dts, dt, rtol=1e-6, atol=1e-9):
        raise DataError("frames are not uniformly spaced in time; resample the trajectory first")
    return float(dt)


def msd_fft(u: np.ndarray, max_lag: int) -> np.ndarray:
    """Multiple-origin MSD for all atoms via FFT autocorrelation; u is (T, N, 3)."""
    T = u.shape[0]
    d2 = np.sum(u * u, axis=2)  # (T, N)
    d2 = np.vstack([d2, np.zeros((1, d2.shape[1]))])
    q = 2.0 * d2.sum(axis=0)
    s1 = np.zeros((T, u.shape[1]))
    for m in range(T):
        q = q - d2[m - 1] - d2[T - m]
        s1[m] = q / (T - m)
    nfft = 2 * T
    f = np.fft.rfft(u, n=nfft, axis=0)
    ac = np.fft.irfft(f * np.conj(f), n=nfft, axis=0)[:T].sum(axis=2)
    s2 = ac / (T - np.arange(T))[:, None]
    per_atom = s1 - 2.0 * s2
    return per_atom.mean(axis=1)[: max_lag + 1]


def msd_compute(trajectory, species: int | None = None,
                region_filter: Callable[[np.ndarray, object], np.ndarray] | None = None,
                max_lag_fraction: float = 0.5, method: str = "auto") -> MsdCurve:
    """MSD(tau) averaged over time origins and atoms.

    ``region_filter(positions, frame)`` returns a boolean mask selecting atoms at
    each origin frame (positions are the unwrapped ones at that origin).
    """
    frames = list(trajectory)
    times = np.array([f.time for f in frames])
    dt = _check_spacing(times)
    sp = frames[0].structure.species_ids
    atoms = np.arange(len(sp)) if species is None else np.nonzero(sp == species)[0]
    u = unwrap_positions(frames, atoms)
    T = len(frames)
    max_lag = max(1, int(np.floor(max_lag_fraction * (T - 1))))
    lags = np.arange(max_lag + 1)
    if len(atoms) == 0:
        return MsdCurve(lags * dt, np.zeros(len(lags)), np.zeros(len(lags), dtype=int), species)
    if region_filter is None and method in ("auto", "fft"):
        msd = msd_fft(u, max_lag)
        msd[0] = 0.0
        counts = (T - lags) * len(atoms)
        return MsdCurve(lags * dt, np.maximum(msd, 0.0), counts, species)
    masks = np.ones((T, len(atoms)), dtype=bool)
    if region_filter is not None:
        masks = np.array([np.asarray(region_filter(u[t], frames[t]), dtype=bool) for t in range(T)])
    msd = np.zeros(len(lags))
    counts = np.zeros(len(lags), dtype=np.int64)
    for k in lags[1:]:
        d = u[k:] - u[:-k]
        sq = np.sum(d * d, axis=2)
        m = masks[:-k]
        counts[k] = m.sum()
        msd[k] = sq[m].sum() / counts[k] if counts[k] else np.nan
    counts[0] = masks.sum()
    return MsdCurve(lags * dt, msd, counts, species)


def radial_band_filter(r_lo: float, r_hi: float, center_species: int = 0):
    """Select atoms whose distance from the centre of ``center_species`` atoms lies in [r_lo, r_hi)."""

    def _filter(positions, frame):
        s = frame.structure
        ref = s.positions[s.species_ids == center_species]
        if not len(ref):
            raise DataError("region filter: no atoms of the centre species")
        center = ref[0] + minimum_image_many(s.cell, s.pbc, ref - ref[0]).mean(axis=0)
        d = minimum_image_many(s.cell, s.pbc, positions - center)
        r = np.linalg.norm(d, axis=1)
        return (r >= r_lo) & (r < r_hi)

    return _filter


def diffusion_fit(msd: MsdCurve, window: tuple[float, float] | None = None,
                  ballistic_threshold: float = 0.2, r2_threshold: float = 0.9) -> DiffusionResult:
    """Least-squares slope of MSD over ``window`` (fs); D = slope / 6.

    The ballistic flag is raised when the quadratic term of a quadratic fit
    carries more than ``ballistic_threshold`` of the fitted signal, or R^2 of the
    linear fit falls below ``r2_threshold``.
    """
    t = np.asarray(msd.lag_times)
    y = np.asarray(msd.msd)
    if window is None:
        window = (float(t[len(t) // 5]), float(t[-1]))
    lo, hi = window
    if lo < t[0] or hi > t[-1] or hi <= lo:
        raise FitError(f"fit window {window} outside available lags [{t[0]}, {t[-1]}]")
    sel = (t >= lo) & (t <= hi) & np.isfinite(y)
    if sel.sum() < 5:
        raise FitError("fit window holds fewer than 5 points")
    tw, yw = t[sel], y[sel]
    if np.ptp(tw) == 0:
        raise FitError("degenerate fit window")
    A = np.vstack([tw, np.ones_like(tw)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, yw, rcond=None)
    resid = yw - (slope * tw + intercept)
    ss_tot = np.sum((yw - yw.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else (1.0 if np.allclose(resid, 0) else 0.0)
    quad = np.polyfit(tw, yw, 2)
    fitted = np.polyval(quad, tw)
    denom = np.sum(np.abs(fitted))
    qfrac = float(np.sum(np.abs(quad[0] * tw**2)) / denom) if denom > 0 else 0.0
    ballistic = bool(qfrac > ballistic_threshold or r2 < r2_threshold)
    D = float(slope / 6.0) if slope >= 0 else None
    return DiffusionResult(D, float(slope), float(intercept), (float(lo), float(hi)), float(r2), ballistic, qfrac)

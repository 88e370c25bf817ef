"""SOAP power spectra for similarity, curation and PCA maps (values only).

The neighbour density around each atom is a sum of Gaussians of width
``sigma_atom`` (the centre atom included), each damped by the cosine cutoff.
It is expanded in Gaussian-type radial functions orthonormalised on
``[0, r_cut]`` times real spherical harmonics. The radial overlap integrals
depend only on the neighbour distance, so they are tabulated once per
parameter set and spline-interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, pi, sqrt

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ive, lpmv

from aloxbench.descriptors.acsf import cutoff_fn
from aloxbench.errors import ConfigError, DataError
from aloxbench.geometry import build_neighbor_list
from aloxbench.structure import SPECIES, Structure

_N_QUAD = 200
_N_TABLE = 1201


@dataclass(frozen=True)
class SoapParams:
    n_max: int = 8
    l_max: int = 6
    sigma_atom: float = 0.5
    r_cut: float = 6.0
    species: tuple[int, ...] = tuple(s.id for s in SPECIES)

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        if self.n_max < 1 or self.l_max < 0:
            raise ConfigError("need n_max >= 1 and l_max >= 0")
        if self.sigma_atom <= 0 or self.r_cut <= 0:
            raise ConfigError("sigma_atom and r_cut must be positive")

    @property
    def species_pairs(self) -> list[tuple[int, int]]:
        sp = self.species
        return [(a, b) for ia, a in enumerate(sp) for b in sp[ia:]]

    @property
    def dim(self) -> int:
        s = len(self.species)
        return s * (s + 1) // 2 * self.n_max**2 * (self.l_max + 1)

    @property
    def structure_dim(self) -> int:
        return len(self.species) * self.dim

    def to_dict(self) -> dict:
        return {"n_max": self.n_max, "l_max": self.l_max, "sigma_atom": self.sigma_atom,
                "r_cut": self.r_cut, "species": list(self.species)}

    @classmethod
    def from_dict(cls, d: dict) -> SoapParams:
        return cls(**d)


@dataclass(frozen=True, eq=False)
class Fingerprint:
    vector: np.ndarray  # (N, dim), rows unit-norm
    structure_vector: np.ndarray  # (S * dim,), unit-norm
    species_ids: np.ndarray


def real_sph_harm(l_max: int, unit: np.ndarray) -> np.ndarray:
    """Orthonormal real spherical harmonics, columns ordered (l, m = -l..l)."""
    unit = np.asarray(unit, dtype=float)
    x, y, z = unit[:, 0], unit[:, 1], unit[:, 2]
    cos_t = np.clip(z, -1.0, 1.0)
    phi = np.arctan2(y, x)
    out = np.zeros((len(unit), (l_max + 1) ** 2))
    for l in range(l_max + 1):
        for m in range(0, l + 1):
            norm = sqrt((2 * l + 1) / (4 * pi) * factorial(l - m) / factorial(l + m))
            p = lpmv(m, l, cos_t)
            if m == 0:
                out[:, l * l + l] = norm * p
            else:
                out[:, l * l + l + m] = sqrt(2.0) * norm * p * np.cos(m * phi)
                out[:, l * l + l - m] = sqrt(2.0) * norm * p * np.sin(m * phi)
    return out


def _scaled_sph_in(l: int, x: np.ndarray) -> np.ndarray:
    """exp(-x) i_l(x), stable for all x >= 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-8
    xs = x[~small]
    out[~small] = np.sqrt(pi / (2.0 * xs)) * ive(l + 0.5, xs)
    out[small] = 1.0 if l == 0 else 0.0
    return out


@lru_cache(maxsize=16)
def _radial_tables(n_max: int, l_max: int, sigma: float, r_cut: float):
    nodes, weights = np.polynomial.legendre.leggauss(_N_QUAD)
    r = 0.5 * r_cut * (nodes + 1.0)
    w = 0.5 * r_cut * weights
    r_n = r_cut * np.arange(1, n_max + 1) / n_max
    alpha = np.log(1000.0) / r_n**2
    phi = np.exp(-alpha[:, None] * r[None, :] ** 2)  # (n, Q)
    S = (phi * (w * r * r)[None, :]) @ phi.T
    evals, evecs = np.linalg.eigh(S)
    if evals.min() <= 0:
        raise ConfigError("radial basis overlap is not positive definite; lower n_max")
    lowdin = evecs @ np.diag(evals**-0.5) @ evecs.T
    g = lowdin @ phi  # orthonormal on [0, r_cut] with weight r^2
    d = np.linspace(0.0, r_cut, _N_TABLE)
    s2 = sigma * sigma
    # density of a Gaussian at distance d, projected on Y_lm: 4 pi exp(-(r^2+d^2)/2s2) i_l(r d / s2)
    xarg = d[:, None] * r[None, :] / s2
    gauss = np.exp(-((r[None, :] - d[:, None]) ** 2) / (2.0 * s2))
    table = np.zeros((_N_TABLE, n_max, l_max + 1))
    for l in range(l_max + 1):
        kern = 4.0 * pi * gauss * _scaled_sph_in(l, xarg)  # (D, Q)
        table[:, :, l] = (kern * (w * r * r)[None, :]) @ g.T
    return CubicSpline(d, table, axis=0)


def soap_compute(structure: Structure, params: SoapParams | None = None) -> Fingerprint:
    params = params or SoapParams()
    n = len(structure)
    sp = structure.species_ids
    S = len(params.species)
    nmax, lmax = params.n_max, params.l_max
    nlm = (lmax + 1) ** 2
    spline = _radial_tables(nmax, lmax, float(params.sigma_atom), float(params.r_cut))
    chan = np.full(len(SPECIES), -1)
    for c, s in enumerate(params.species):
        chan[s] = c
    l_of = np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)
    coeff = np.zeros((n, S, nmax, nlm))
    # centre atom: only l = 0 survives
    centre = spline(0.0)[:, 0] / sqrt(4 * pi)
    own = chan[sp]
    ok = own >= 0
    coeff[np.nonzero(ok)[0], own[ok], :, 0] += centre
    if n > 1:
        nl = build_neighbor_list(structure, params.r_cut)
        ch = chan[sp[nl.j]]
        keep = (ch >= 0) & (nl.dist < params.r_cut)
        i, r, d, ch = nl.i[keep], nl.dist[keep], nl.disp[keep], ch[keep]
        if len(i):
            fc, _ = cutoff_fn(r, params.r_cut)
            rad = spline(r)[:, :, l_of]  # (P, n, nlm)
            ylm = real_sph_harm(lmax, d / r[:, None])  # (P, nlm)
            contrib = fc[:, None, None] * rad * ylm[:, None, :]
            flat = (i * S + ch)
            acc = np.zeros((n * S, nmax * nlm))
            np.add.at(acc, flat, contrib.reshape(len(i), -1))
            coeff += acc.reshape(n, S, nmax, nlm)
    blocks = []
    for a, b in params.species_pairs:
        ca, cb = coeff[:, chan[a]], coeff[:, chan[b]]
        prod = ca[:, :, None, :] * cb[:, None, :, :]  # (N, n, n', nlm)
        p = np.zeros((n, nmax, nmax, lmax + 1))
        for l in range(lmax + 1):
            p[..., l] = prod[..., l * l:(l + 1) ** 2].sum(axis=-1)
        blocks.append(p.reshape(n, -1))
    vec = np.concatenate(blocks, axis=1)
    vec = vec / np.linalg.norm(vec, axis=1, keepdims=True)
    means = []
    for s in params.species:
        mask = sp == s
        means.append(vec[mask].mean(axis=0) if mask.any() else np.zeros(params.dim))
    sv = np.concatenate(means)
    sv = sv / np.linalg.norm(sv)
    return Fingerprint(vec, sv, sp.copy())


def fingerprint_distance(f1, f2) -> float:
    """Chord distance ``sqrt(2 - 2 f1.f2)`` between unit-norm fingerprints."""
    a = np.asarray(f1, dtype=float)
    b = np.asarray(f2, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"fingerprint dimension mismatch: {a.shape} vs {b.shape}")
    d = float(np.sqrt(max(0.0, 2.0 - 2.0 * float(a @ b))))
    return float(np.linalg.norm(a - b)) if d < 1e-6 else d


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Chord distances between rows of ``a`` and rows of ``b``."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise DataError(f"fingerprint dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    d = np.sqrt(np.clip(2.0 - 2.0 * (a @ b.T), 0.0, None))
    # the expanded form leaves ~1e-8 of rounding for identical rows; recompute those exactly
    ii, jj = np.nonzero(d < 1e-6)
    if len(ii):
        d[ii, jj] = np.linalg.norm(a[ii] - b[jj], axis=1)
    return d


def export_fingerprints(path, vectors: np.ndarray, tags=None) -> None:
    vectors = np.atleast_2d(vectors)
    tags = tags if tags is not None else [str(k) for k in range(len(vectors))]
    lines = ["# aloxbench fingerprints; unit-norm SOAP vectors; columns: tag f0 f1 ..."]
    for t, v in zip(tags, vectors):
        lines.append(t + " " + " ".join(repr(float(x)) for x in v))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

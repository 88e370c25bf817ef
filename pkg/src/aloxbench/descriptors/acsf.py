"""Atom-centred symmetry functions with analytic position gradients.

Radial functions, one block per neighbour species::

    G[s, eta, rs] = sum_{j in s} exp(-eta (r_ij - rs)^2) fc(r_ij)

with the cosine cutoff ``fc(r) = (cos(pi r / r_cut) + 1) / 2``. Optional angular
functions (off by default) use one block per unordered neighbour-species pair::

    G[s1 s2, eta, zeta, lam] = 2^(1-zeta) sum_{j<k} (1 + lam cos t_ijk)^zeta
                               exp(-eta (r_ij^2 + r_ik^2)) fc(r_ij) fc(r_ik)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aloxbench.errors import ConfigError
from aloxbench.geometry import NeighborTable, build_neighbor_list
from aloxbench.structure import SPECIES, Structure


@dataclass(frozen=True)
class AcsfParams:
    r_cut: float = 6.0
    eta_grid: tuple[float, ...] = (0.05, 0.23, 1.0, 4.4)
    rs_grid: tuple[float, ...] = (0.0, 1.5, 3.0, 4.5)
    species: tuple[int, ...] = tuple(s.id for s in SPECIES)
    angular_enabled: bool = False
    angular_eta: tuple[float, ...] = (0.01, 0.1)
    angular_zeta: tuple[float, ...] = (1.0, 4.0)
    angular_lambda: tuple[float, ...] = (-1.0, 1.0)

    def __post_init__(self):
        for name in ("eta_grid", "rs_grid", "species", "angular_eta", "angular_zeta", "angular_lambda"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.r_cut > 0:
            raise ConfigError("ACSF r_cut must be positive")
        if not self.eta_grid or not self.rs_grid or not self.species:
            raise ConfigError("ACSF grids must be non-empty")

    @property
    def n_radial(self) -> int:
        """Radial functions per neighbour-species block."""
        return len(self.eta_grid) * len(self.rs_grid)

    @property
    def species_pairs(self) -> list[tuple[int, int]]:
        sp = self.species
        return [(sp[a], sp[b]) for a in range(len(sp)) for b in range(a, len(sp))]

    @property
    def n_angular(self) -> int:
        if not self.angular_enabled:
            return 0
        per = len(self.angular_eta) * len(self.angular_zeta) * len(self.angular_lambda)
        return per * len(self.species_pairs)

    @property
    def dim(self) -> int:
        return self.n_radial * len(self.species) + self.n_angular

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> AcsfParams:
        return cls(**d)


@dataclass(frozen=True, eq=False)
class AtomFeatures:
    """Feature values plus gradients.

    Radial gradients are kept compact: pair ``p`` (centre ``pair_i[p]``, neighbour
    ``pair_j[p]``) contributes ``dg[p, k] * unit[p]`` to d G_i[channel, k] / d r_j
    and the negative to d G_i / d r_i. Angular gradients, when enabled, are
    stored densely as ``(ang_center, ang_atom, ang_grad[(G, F, 3)])``.
    """

    params: AcsfParams
    species_ids: np.ndarray
    values: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    channel: np.ndarray
    unit: np.ndarray
    dg: np.ndarray
    ang_center: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ang_atom: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ang_grad: np.ndarray | None = None

    @property
    def n_atoms(self) -> int:
        return len(self.values)

    def gradient_map(self, i: int) -> dict[int, np.ndarray]:
        """``{atom: dG_i/dr_atom}`` with arrays of shape (F, 3), self term included."""
        F = self.params.dim
        K = self.params.n_radial
        out: dict[int, np.ndarray] = {}
        for p in np.nonzero(self.pair_i == i)[0]:
            g = np.zeros((F, 3))
            c = self.channel[p]
            g[c * K:(c + 1) * K] = self.dg[p][:, None] * self.unit[p][None, :]
            j = int(self.pair_j[p])
            out[j] = out.get(j, np.zeros((F, 3))) + g
            out[i] = out.get(i, np.zeros((F, 3))) - g
        if self.ang_grad is not None:
            for e in np.nonzero(self.ang_center == i)[0]:
                a = int(self.ang_atom[e])
                out[a] = out.get(a, np.zeros((F, 3))) + self.ang_grad[e]
        return out

    def dense_gradients(self) -> np.ndarray:
        """Full (N, F, N, 3) Jacobian; only for small test systems."""
        n, F = self.n_atoms, self.params.dim
        jac = np.zeros((n, F, n, 3))
        for i in range(n):
            for a, g in self.gradient_map(i).items():
                jac[i, :, a, :] += g
        return jac

    def forces(self, atom_weights: np.ndarray) -> np.ndarray:
        """``-sum_i atom_weights[i] . dG_i/dr`` for per-atom weight rows (N, F)."""
        n = self.n_atoms
        K = self.params.n_radial
        out = np.zeros((n, 3))
        if len(self.pair_i):
            w = atom_weights[self.pair_i]  # (P, F)
            cols = self.channel[:, None] * K + np.arange(K)[None, :]
            q = np.einsum("pk,pk->p", np.take_along_axis(w, cols, axis=1), self.dg)
            vec = q[:, None] * self.unit
            for ax in range(3):
                out[:, ax] -= np.bincount(self.pair_j, weights=vec[:, ax], minlength=n)
                out[:, ax] += np.bincount(self.pair_i, weights=vec[:, ax], minlength=n)
        if self.ang_grad is not None and len(self.ang_center):
            contrib = np.einsum("ef,efx->ex", atom_weights[self.ang_center], self.ang_grad)
            for ax in range(3):
                out[:, ax] -= np.bincount(self.ang_atom, weights=contrib[:, ax], minlength=n)
        return out


def cutoff_fn(r, r_cut):
    fc = 0.5 * (np.cos(np.pi * r / r_cut) + 1.0)
    dfc = -0.5 * np.pi / r_cut * np.sin(np.pi * r / r_cut)
    inside = r <= r_cut
    return np.where(inside, fc, 0.0), np.where(inside, dfc, 0.0)


def _radial(nl: NeighborTable, species_ids, params: AcsfParams):
    n = nl.n_atoms
    K = params.n_radial
    chan_of = {s: c for c, s in enumerate(params.species)}
    chan_lookup = np.full(len(SPECIES), -1)
    for s, c in chan_of.items():
        chan_lookup[s] = c
    ch = chan_lookup[species_ids[nl.j]]
    keep = ch >= 0
    i, j, r, d, ch = nl.i[keep], nl.j[keep], nl.dist[keep], nl.disp[keep], ch[keep]
    eta = np.repeat(np.asarray(params.eta_grid), len(params.rs_grid))
    rs = np.tile(np.asarray(params.rs_grid), len(params.eta_grid))
    fc, dfc = cutoff_fn(r, params.r_cut)
    x = r[:, None] - rs[None, :]
    gauss = np.exp(-eta[None, :] * x * x)
    g = gauss * fc[:, None]
    dg = gauss * (-2.0 * eta[None, :] * x * fc[:, None] + dfc[:, None])
    values = np.zeros((n, len(params.species) * K))
    flat = (i * len(params.species) + ch)[:, None] * K + np.arange(K)[None, :]
    values.ravel()[:] = np.bincount(flat.ravel(), weights=g.ravel(), minlength=values.size)
    unit = d / r[:, None]
    return values, i, j, ch, unit, dg


def _angular(nl: NeighborTable, species_ids, params: AcsfParams):
    n = nl.n_atoms
    pairs = params.species_pairs
    pair_index = {p: k for k, p in enumerate(pairs)}
    combos = [(e, z, lam) for e in params.angular_eta for z in params.angular_zeta for lam in params.angular_lambda]
    per = len(combos)
    off = params.n_radial * len(params.species)
    values = np.zeros((n, params.n_angular))
    centers, atoms, grads = [], [], []
    eta = np.array([c[0] for c in combos])
    zeta = np.array([c[1] for c in combos])
    lam = np.array([c[2] for c in combos])
    allowed = set(params.species)
    for i in range(n):
        lo, hi = np.searchsorted(nl.i, [i, i + 1])
        sel = np.arange(lo, hi)
        sel = sel[[species_ids[nl.j[p]] in allowed for p in sel]]
        if len(sel) < 2:
            continue
        a, b = np.triu_indices(len(sel), k=1)
        pa, pb = sel[a], sel[b]
        u, v = nl.disp[pa], nl.disp[pb]
        ru, rv = nl.dist[pa], nl.dist[pb]
        cos = np.einsum("tx,tx->t", u, v) / (ru * rv)
        fu, dfu = cutoff_fn(ru, params.r_cut)
        fv, dfv = cutoff_fn(rv, params.r_cut)
        base = 1.0 + lam[None, :] * cos[:, None]  # (T, C)
        base_c = np.maximum(base, 0.0)
        ang = base_c ** zeta[None, :]
        dang = np.where(base > 0, zeta[None, :] * base_c ** (zeta[None, :] - 1.0), 0.0) * lam[None, :]
        pref = 2.0 ** (1.0 - zeta)[None, :]
        Ru = np.exp(-eta[None, :] * ru[:, None] ** 2) * fu[:, None]
        Rv = np.exp(-eta[None, :] * rv[:, None] ** 2) * fv[:, None]
        dRu = np.exp(-eta[None, :] * ru[:, None] ** 2) * (-2.0 * eta[None, :] * ru[:, None] * fu[:, None] + dfu[:, None])
        dRv = np.exp(-eta[None, :] * rv[:, None] ** 2) * (-2.0 * eta[None, :] * rv[:, None] * fv[:, None] + dfv[:, None])
        term = pref * ang * Ru * Rv  # (T, C)
        sj = species_ids[nl.j[pa]]
        sk = species_ids[nl.j[pb]]
        chan = np.array([pair_index[(min(x, y), max(x, y))] for x, y in zip(sj, sk)])
        cols = off + chan[:, None] * per + np.arange(per)[None, :]
        np.add.at(values[i], (cols - off).ravel(), term.ravel())
        dcos_du = v / (ru * rv)[:, None] - (cos / ru**2)[:, None] * u
        dcos_dv = u / (ru * rv)[:, None] - (cos / rv**2)[:, None] * v
        gu = (pref * dang * Ru * Rv)[:, :, None] * dcos_du[:, None, :] + (pref * ang * dRu * Rv)[:, :, None] * (u / ru[:, None])[:, None, :]
        gv = (pref * dang * Ru * Rv)[:, :, None] * dcos_dv[:, None, :] + (pref * ang * Ru * dRv)[:, :, None] * (v / rv[:, None])[:, None, :]
        T = len(pa)
        for targets, gvec in ((nl.j[pa], gu), (nl.j[pb], gv), (np.full(T, i), -(gu + gv))):
            full = np.zeros((T, params.dim, 3))
            full[np.arange(T)[:, None], cols] = gvec
            centers.append(np.full(T, i))
            atoms.append(targets)
            grads.append(full)
    if not centers:
        return values, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, params.dim, 3))
    return values, np.concatenate(centers), np.concatenate(atoms), np.concatenate(grads)


def acsf_compute(structure: Structure, params: AcsfParams | None = None,
                 neighbors: NeighborTable | None = None) -> AtomFeatures:
    params = params or AcsfParams()
    sp = structure.species_ids
    n = len(structure)
    if n == 0:
        raise ConfigError("empty structure")
    nl = neighbors if neighbors is not None else build_neighbor_list(structure, params.r_cut)
    if neighbors is not None and nl.cutoff != params.r_cut:
        keep = nl.dist <= params.r_cut
        nl = NeighborTable(params.r_cut, nl.n_atoms, nl.i[keep], nl.j[keep], nl.disp[keep], nl.dist[keep])
    values_r, i, j, ch, unit, dg = _radial(nl, sp, params)
    if not params.angular_enabled:
        return AtomFeatures(params, sp, values_r, i, j, ch, unit, dg)
    values_a, ac, aa, ag = _angular(nl, sp, params)
    values = np.concatenate([values_r, values_a], axis=1)
    return AtomFeatures(params, sp, values, i, j, ch, unit, dg, ac, aa, ag)

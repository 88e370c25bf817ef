"""Analytic Al-O pair potential used as the ground-truth labeler.

Each species pair carries a Morse well plus a short-range exponential core,
multiplied by a quintic switch that takes the pair term smoothly to zero
between ``r_on`` and ``r_cut``. Inside ``r_on`` the Morse well is untouched,
so a dimer at ``r_e`` sits exactly at ``-D_e``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from aloxbench.errors import ConfigError, UnphysicalContactError
from aloxbench.geometry import build_neighbor_list
from aloxbench.structure import SPECIES, SYMBOL_TO_ID, LabeledFrame, Structure

MIN_CONTACT = 0.1  # angstrom


@dataclass(frozen=True)
class PairTerm:
    D_e: float
    a: float
    r_e: float
    r_cut: float
    r_on: float | None = None
    A: float = 0.0
    rho: float = 0.3
    r_inner: float = 0.0

    def __post_init__(self):
        if self.r_on is None:
            object.__setattr__(self, "r_on", max(self.r_e, self.r_cut - 1.0))
        if not (self.D_e > 0 and self.a > 0 and self.r_e > 0):
            raise ConfigError("D_e, a and r_e must be positive")
        if not self.r_cut > self.r_e:
            raise ConfigError("r_cut must exceed r_e")
        if not (0 < self.r_on < self.r_cut):
            raise ConfigError("r_on must lie in (0, r_cut)")
        if self.A < 0 or self.rho <= 0 or self.r_inner < 0:
            raise ConfigError("invalid repulsive core parameters")


@dataclass(frozen=True)
class PairPotentialParams:
    """Pair terms keyed by unordered species pair, e.g. ``("Al", "O")``."""

    pairs: dict

    def term(self, s1: int, s2: int) -> PairTerm:
        a, b = sorted((SPECIES[s1].symbol, SPECIES[s2].symbol), key=lambda x: SYMBOL_TO_ID[x])
        try:
            return self.pairs[f"{a}-{b}"]
        except KeyError:
            raise ConfigError(f"no pair term for {a}-{b}") from None

    @property
    def max_cutoff(self) -> float:
        return max(t.r_cut for t in self.pairs.values())

    def table(self) -> dict[str, np.ndarray]:
        n = len(SPECIES)
        out = {k: np.zeros((n, n)) for k in PairTerm.__dataclass_fields__}
        for s1 in range(n):
            for s2 in range(n):
                t = self.term(s1, s2)
                for k in out:
                    out[k][s1, s2] = getattr(t, k)
        return out

    def to_dict(self) -> dict:
        return {
            "format": "aloxbench-pair-params",
            "version": 1,
            "units": {"energy": "eV", "length": "angstrom"},
            "pairs": {k: asdict(v) for k, v in self.pairs.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> PairPotentialParams:
        if d.get("format") != "aloxbench-pair-params":
            raise ConfigError("not a pair-parameter document")
        pairs = {}
        for key, vals in d["pairs"].items():
            a, b = key.split("-")
            if SYMBOL_TO_ID[a] > SYMBOL_TO_ID[b]:
                a, b = b, a
            pairs[f"{a}-{b}"] = PairTerm(**vals)
        return cls(pairs)

    @classmethod
    def load(cls, path) -> PairPotentialParams:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def default_params() -> PairPotentialParams:
    text = resources.files("aloxbench.data").joinpath("toy_alo.json").read_text()
    return PairPotentialParams.from_dict(json.loads(text))


def _switch(r, r_on, r_cut):
    """Quintic smoothstep from 1 at r_on to 0 at r_cut, with its derivative."""
    x = np.clip((r - r_on) / (r_cut - r_on), 0.0, 1.0)
    s = 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x**2)
    ds = -30.0 * x**2 * (1.0 - x) ** 2 / (r_cut - r_on)
    return s, ds


def pair_terms(r, tab: dict, si, sj):
    """Pair energy and dV/dr for distances ``r`` between species ``si`` and ``sj``."""
    D, a, re = tab["D_e"][si, sj], tab["a"][si, sj], tab["r_e"][si, sj]
    rc, ron = tab["r_cut"][si, sj], tab["r_on"][si, sj]
    A, rho, rin = tab["A"][si, sj], tab["rho"][si, sj], tab["r_inner"][si, sj]
    e1 = np.exp(-a * (r - re))
    morse = D * (e1 * e1 - 2.0 * e1)
    dmorse = D * (-2.0 * a * e1 * e1 + 2.0 * a * e1)
    inside = r < rin
    ein = np.exp(-rin / rho)
    rep = np.where(inside, A * (np.exp(-r / rho) - ein * (1.0 - (r - rin) / rho)), 0.0)
    drep = np.where(inside, A / rho * (ein - np.exp(-r / rho)), 0.0)
    s, ds = _switch(r, ron, rc)
    v = morse + rep
    e = np.where(r < rc, v * s, 0.0)
    de = np.where(r < rc, (dmorse + drep) * s + v * ds, 0.0)
    return e, de


@dataclass(frozen=True, eq=False)
class OracleLabel:
    energy: float
    forces: np.ndarray
    per_atom_energy: np.ndarray


class PairPotential:
    """Callable ground-truth potential; stateless apart from its parameters."""

    def __init__(self, params: PairPotentialParams | None = None):
        self.params = params or default_params()
        self._tab = self.params.table()

    @property
    def cutoff(self) -> float:
        return self.params.max_cutoff

    def label(self, structure: Structure) -> OracleLabel:
        n = len(structure)
        forces = np.zeros((n, 3))
        per_atom = np.zeros(n)
        if n < 2:
            return OracleLabel(0.0, forces, per_atom)
        nl = build_neighbor_list(structure, self.cutoff)
        if len(nl) and nl.dist.min() < MIN_CONTACT:
            p = int(np.argmin(nl.dist))
            raise UnphysicalContactError(
                f"unphysical contact: atoms {nl.i[p]} and {nl.j[p]} at {nl.dist[p]:.4f} A"
            )
        sp = structure.species_ids
        e, de = pair_terms(nl.dist, self._tab, sp[nl.i], sp[nl.j])
        # every unordered pair appears twice; each directed copy carries half
        half = 0.5 * e
        per_atom = np.bincount(nl.i, weights=half, minlength=n)
        # directed (i, j): d(0.5 V)/d r_j = 0.5 V' u, and the reverse copy adds the mirror
        g = (0.5 * de / nl.dist)[:, None] * nl.disp
        for ax in range(3):
            forces[:, ax] += np.bincount(nl.i, weights=g[:, ax], minlength=n)
            forces[:, ax] -= np.bincount(nl.j, weights=g[:, ax], minlength=n)
        return OracleLabel(float(per_atom.sum()), forces, per_atom)

    def compute(self, structure: Structure):
        lab = self.label(structure)
        return lab.energy, lab.forces


def pair_energy_forces(structure: Structure, params: PairPotentialParams | None = None) -> OracleLabel:
    return PairPotential(params).label(structure)


def label_frames(frames, params: PairPotentialParams | None = None, potential: PairPotential | None = None):
    """Label frames in order. Returns ``(labeled, rejected)``; rejected holds ``(index, frame, reason)``."""
    pot = potential or PairPotential(params)
    labeled, rejected = [], []
    for k, fr in enumerate(frames):
        try:
            lab = pot.label(fr.structure)
        except UnphysicalContactError as exc:
            rejected.append((k, fr, str(exc)))
            continue
        labeled.append(LabeledFrame(fr, lab.energy, lab.forces))
    return labeled, rejected


__all__ = [
    "OracleLabel", "PairPotential", "PairPotentialParams", "PairTerm",
    "default_params", "label_frames", "pair_energy_forces",
]

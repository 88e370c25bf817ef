"""Species counting: gas-phase O2, bound O, particle/vapour/oxidised Al."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from aloxbench.geometry import build_neighbor_list
from aloxbench.structure import AL, O, Frame


@dataclass(frozen=True)
class CensusCriteria:
    r_OO: float = 1.5
    r_AlO: float = 2.5
    r_AlAl: float = 3.4

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SpeciesCensus:
    n_O2_gas: int
    n_O_bound: int
    n_Al_particle: int
    n_Al_vapor: int
    n_Al_oxidized: int
    time: float
    n_O_total: int
    n_Al_total: int

    def to_dict(self) -> dict:
        return asdict(self)


def gas_o2_pairs(frame: Frame, criteria: CensusCriteria = CensusCriteria()) -> list[tuple[int, int]]:
    """O-O pairs within r_OO, each O having exactly that one O partner and no Al within r_AlO."""
    s = frame.structure
    sp = s.species_ids
    if len(s) < 2:
        return []
    nl = build_neighbor_list(s, max(criteria.r_OO, criteria.r_AlO))
    si, sj = sp[nl.i], sp[nl.j]
    oo = (si == O) & (sj == O) & (nl.dist <= criteria.r_OO)
    alo = (si == O) & (sj == AL) & (nl.dist <= criteria.r_AlO)
    n = len(s)
    n_o_partners = np.bincount(nl.i[oo], minlength=n)
    has_al = np.bincount(nl.i[alo], minlength=n) > 0
    pairs = []
    for a, b in zip(nl.i[oo], nl.j[oo]):
        if a < b and n_o_partners[a] == 1 and n_o_partners[b] == 1 and not has_al[a] and not has_al[b]:
            pairs.append((int(a), int(b)))
    return sorted(set(pairs))


def species_census(frame: Frame, criteria: CensusCriteria = CensusCriteria()) -> SpeciesCensus:
    s = frame.structure
    sp = s.species_ids
    n = len(s)
    n_o = int(np.sum(sp == O))
    n_al = int(np.sum(sp == AL))
    gas = gas_o2_pairs(frame, criteria)
    n_particle = n_vapor = n_oxidized = 0
    if n_al:
        al_idx = np.nonzero(sp == AL)[0]
        nl = build_neighbor_list(s, max(criteria.r_AlAl, criteria.r_AlO)) if n > 1 else None
        if nl is not None and len(nl):
            si, sj = sp[nl.i], sp[nl.j]
            aa = (si == AL) & (sj == AL) & (nl.dist <= criteria.r_AlAl)
            graph = coo_matrix((np.ones(int(aa.sum())), (nl.i[aa], nl.j[aa])), shape=(n, n))
            _, labels = connected_components(graph, directed=False)
            al_labels = labels[al_idx]
            sizes = np.bincount(al_labels)
            # largest component; ties go to the one holding the lowest Al index
            best = max(np.unique(al_labels), key=lambda c: (sizes[c], -al_idx[al_labels == c].min()))
            n_particle = int(sizes[best])
            ao = (si == AL) & (sj == O) & (nl.dist <= criteria.r_AlO)
            n_oxidized = int(len(np.unique(nl.i[ao])))
        else:
            n_particle = 1
        n_vapor = n_al - n_particle
    return SpeciesCensus(len(gas), n_o - 2 * len(gas), n_particle, n_vapor, n_oxidized,
                         float(frame.time), n_o, n_al)

"""Atomic structure containers shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from aloxbench.errors import DataError, GeometryError


@dataclass(frozen=True)
class Species:
    id: int
    symbol: str
    mass: float


SPECIES: tuple[Species, ...] = (
    Species(0, "Al", 26.9815),
    Species(1, "O", 15.999),
)
SYMBOL_TO_ID = {s.symbol: s.id for s in SPECIES}
MASSES = np.array([s.mass for s in SPECIES])
AL, O = 0, 1


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Structure:
    """Periodic (or partly periodic) cell with species ids and Cartesian positions.

    ``cell`` rows are lattice vectors in angstrom. Non-periodic axes still need a
    row; it only matters for wrapping and image search on periodic axes.
    """

    cell: np.ndarray
    species_ids: np.ndarray
    positions: np.ndarray
    pbc: tuple[bool, bool, bool] = (True, True, True)

    def __post_init__(self):
        cell = _frozen(self.cell)
        pos = _frozen(self.positions).reshape(-1, 3)
        ids = _frozen(self.species_ids, dtype=np.int64).reshape(-1)
        pbc = tuple(bool(p) for p in self.pbc)
        if cell.shape != (3, 3):
            raise GeometryError(f"cell must be 3x3, got {cell.shape}")
        if len(ids) != len(pos):
            raise DataError("species_ids and positions differ in length")
        if not np.all(np.isfinite(pos)):
            raise DataError("non-finite positions")
        if len(ids) and (ids.min() < 0 or ids.max() >= len(SPECIES)):
            raise DataError("invalid species id")
        if any(pbc) and abs(np.linalg.det(cell)) < 1e-12:
            raise GeometryError("singular cell with periodic axes")
        object.__setattr__(self, "cell", cell)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "species_ids", ids)
        object.__setattr__(self, "pbc", pbc)

    def __len__(self) -> int:
        return len(self.species_ids)

    @property
    def masses(self) -> np.ndarray:
        return MASSES[self.species_ids]

    @property
    def symbols(self) -> list[str]:
        return [SPECIES[i].symbol for i in self.species_ids]

    def with_positions(self, positions) -> Structure:
        return replace(self, positions=positions)

    def wrapped(self) -> Structure:
        """Positions folded into the cell along periodic axes."""
        if not any(self.pbc):
            return self
        frac = self.positions @ np.linalg.inv(self.cell)
        mask = np.array(self.pbc)
        frac[:, mask] -= np.floor(frac[:, mask])
        return self.with_positions(frac @ self.cell)

    def count(self, species_id: int) -> int:
        return int(np.sum(self.species_ids == species_id))

    def equals(self, other: Structure) -> bool:
        return (
            self.pbc == other.pbc
            and np.array_equal(self.cell, other.cell)
            and np.array_equal(self.species_ids, other.species_ids)
            and np.array_equal(self.positions, other.positions)
        )


@dataclass(frozen=True, eq=False)
class Frame:
    structure: Structure
    velocities: np.ndarray | None = None
    time: float = 0.0
    tag: str = ""
    annotations: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.velocities is not None:
            v = _frozen(self.velocities).reshape(-1, 3)
            if len(v) != len(self.structure):
                raise DataError("velocity array length differs from atom count")
            object.__setattr__(self, "velocities", v)

    def __len__(self) -> int:
        return len(self.structure)


@dataclass(frozen=True, eq=False)
class LabeledFrame:
    frame: Frame
    energy: float
    forces: np.ndarray

    def __post_init__(self):
        f = _frozen(self.forces).reshape(-1, 3)
        if len(f) != len(self.frame):
            raise DataError("forces length differs from atom count")
        object.__setattr__(self, "forces", f)
        object.__setattr__(self, "energy", float(self.energy))

    @property
    def structure(self) -> Structure:
        return self.frame.structure

    @property
    def tag(self) -> str:
        return self.frame.tag

    def __len__(self) -> int:
        return len(self.frame)


def cluster(species, positions, box: float = 30.0) -> Structure:
    """Non-periodic structure; accepts symbols or ids."""
    ids = [SYMBOL_TO_ID[s] if isinstance(s, str) else int(s) for s in species]
    return Structure(np.eye(3) * box, ids, positions, pbc=(False, False, False))

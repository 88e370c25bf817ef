"""Scene construction: FCC Al particle, optional oxide shell, O2 gas; bulk seed cells."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from aloxbench.errors import ConfigError, PlacementError
from aloxbench.dynamics.md import maxwell_boltzmann
from aloxbench.geometry import minimum_image_many
from aloxbench.structure import AL, O, Frame, Structure

MIN_SHELL_DISTANCE = 1.6
MAX_ATTEMPTS = 10_000

FCC_BASIS = np.array([[0, 0, 0], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])


@dataclass(frozen=True)
class SceneSpec:
    particle_radius: float = 8.0
    lattice_constant: float = 4.05
    shell_thickness: float = 0.0
    shell_stoichiometry: float = 1.5  # O:Al
    box_length: float = 30.0
    n_O2: int = 0
    T_init: float = 300.0
    seed: int = 0
    exclusion_radius: float = 3.0
    bond_length: float = 1.21
    shell_o_density: float = 0.0617  # O per cubic angstrom, alumina-like

    def __post_init__(self):
        if self.box_length <= 2 * (self.particle_radius + self.shell_thickness):
            raise ConfigError("box_length must exceed the particle diameter including shell")
        if self.n_O2 < 0 or self.particle_radius < 0 or self.shell_thickness < 0:
            raise ConfigError("counts and radii must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


def fcc_sphere_sites(radius: float, a: float) -> np.ndarray:
    """FCC lattice sites (origin on a site) within ``radius``, in a fixed order."""
    n = int(np.ceil(radius / a)) + 1
    cells = np.array(list(itertools.product(range(-n, n + 1), repeat=3)), dtype=float)
    sites = (cells[:, None, :] + FCC_BASIS[None, :, :]).reshape(-1, 3) * a
    keep = np.linalg.norm(sites, axis=1) <= radius + 1e-9
    return sites[keep]


def random_orientation(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def place_o2(structure: Structure, n_molecules: int, rng: np.random.Generator, exclusion: float,
             bond_length: float = 1.21, center=None, min_center_distance: float = 0.0) -> np.ndarray:
    """Positions (2n, 3) for new O2 molecules honouring the exclusion radius."""
    cell = structure.cell
    existing = structure.positions.copy()
    new = []
    for _ in range(n_molecules):
        for _attempt in range(MAX_ATTEMPTS):
            c = rng.random(3) @ cell
            if center is not None:
                dc = minimum_image_many(cell, structure.pbc, (c - center)[None, :])[0]
                if np.linalg.norm(dc) < min_center_distance:
                    continue
            u = random_orientation(rng)
            pair = np.array([c - 0.5 * bond_length * u, c + 0.5 * bond_length * u])
            if len(existing):
                d = minimum_image_many(cell, structure.pbc,
                                       (existing[None, :, :] - pair[:, None, :]).reshape(-1, 3))
                if np.min(np.linalg.norm(d, axis=1)) < exclusion:
                    continue
            new.append(pair)
            existing = np.vstack([existing, pair])
            break
        else:
            raise PlacementError(f"could not place O2 molecule after {MAX_ATTEMPTS} attempts")
    return np.vstack(new) if new else np.zeros((0, 3))


def quench(structure: Structure, potential, max_steps: int = 200, f_tol: float = 0.5,
           max_move: float = 0.1) -> Structure:
    """Bounded steepest descent: stop after ``max_steps`` or when max |F| < f_tol."""
    x = structure.positions.copy()
    energy, forces = potential.compute(structure)
    step_len = 0.01
    for _ in range(max_steps):
        fmax = np.max(np.linalg.norm(forces, axis=1)) if len(forces) else 0.0
        if fmax < f_tol:
            break
        trial = x + min(step_len, max_move / fmax) * forces
        e_new, f_new = potential.compute(structure.with_positions(trial))
        if e_new < energy:
            x, energy, forces = trial, e_new, f_new
            step_len *= 1.2
        else:
            step_len *= 0.5
    return structure.with_positions(x)


def build_scene(spec: SceneSpec, potential=None) -> Frame:
    rng = np.random.default_rng(spec.seed)
    L = spec.box_length
    cell = np.eye(3) * L
    center = np.full(3, 0.5 * L)
    sites = fcc_sphere_sites(spec.particle_radius, spec.lattice_constant)
    species = [AL] * len(sites)
    positions = list(sites + center)
    R, t = spec.particle_radius, spec.shell_thickness
    if t > 0:
        vol = 4.0 / 3.0 * np.pi * ((R + t) ** 3 - R**3)
        n_o = int(round(spec.shell_o_density * vol))
        n_al = int(round(n_o / spec.shell_stoichiometry))
        todo = [O] * n_o + [AL] * n_al
        rng.shuffle(todo)
        placed = np.array(positions)
        for sid in todo:
            for _attempt in range(MAX_ATTEMPTS):
                u = random_orientation(rng)
                r = (R**3 + rng.random() * ((R + t) ** 3 - R**3)) ** (1.0 / 3.0)
                p = center + r * u
                if len(placed) == 0 or np.min(np.linalg.norm(placed - p, axis=1)) >= MIN_SHELL_DISTANCE:
                    break
            else:
                raise PlacementError("could not pack the oxide shell at the minimum distance")
            placed = np.vstack([placed, p])
            positions.append(p)
            species.append(sid)
    structure = Structure(cell, species, np.array(positions).reshape(-1, 3))
    if t > 0:
        if potential is None:
            from aloxbench.oracle import PairPotential
            potential = PairPotential()
        structure = quench(structure, potential)
    if spec.n_O2:
        gas = place_o2(structure, spec.n_O2, rng, spec.exclusion_radius, spec.bond_length,
                       center=center, min_center_distance=R + t + spec.exclusion_radius)
        structure = Structure(cell, list(structure.species_ids) + [O] * len(gas),
                              np.vstack([structure.positions, gas]))
    v = maxwell_boltzmann(structure.masses, spec.T_init, rng) if len(structure) else np.zeros((0, 3))
    return Frame(structure, v, 0.0, "scene")


def bulk_fcc(n_cells: int = 3, a: float = 4.05) -> Structure:
    cells = np.array(list(itertools.product(range(n_cells), repeat=3)), dtype=float)
    pos = (cells[:, None, :] + FCC_BASIS[None, :, :]).reshape(-1, 3) * a
    return Structure(np.eye(3) * n_cells * a, [AL] * len(pos), pos)


def random_packing(box: float, n_al: int, n_o: int, seed: int = 0, potential=None,
                   min_distance: float = MIN_SHELL_DISTANCE) -> Structure:
    """Random periodic Al/O packing relaxed by a bounded quench (amorphous oxide proxy)."""
    rng = np.random.default_rng(seed)
    cell = np.eye(3) * box
    todo = [AL] * n_al + [O] * n_o
    rng.shuffle(todo)
    pos = np.zeros((0, 3))
    for _ in todo:
        for _attempt in range(MAX_ATTEMPTS):
            p = rng.random(3) * box
            if not len(pos):
                break
            d = minimum_image_many(cell, (True, True, True), pos - p)
            if np.min(np.linalg.norm(d, axis=1)) >= min_distance:
                break
        else:
            raise PlacementError("random packing failed at the minimum distance")
        pos = np.vstack([pos, p])
    s = Structure(cell, todo, pos)
    if potential is None:
        from aloxbench.oracle import PairPotential
        potential = PairPotential()
    return quench(s, potential)


def random_cluster(n_al: int, n_o: int, seed: int = 0, box: float = 20.0, radius: float | None = None,
                   min_distance: float = MIN_SHELL_DISTANCE) -> Structure:
    """Small random Al/O cluster in a periodic box large enough to isolate it."""
    rng = np.random.default_rng(seed)
    n = n_al + n_o
    radius = radius or max(2.0, 1.3 * n ** (1.0 / 3.0))
    todo = [AL] * n_al + [O] * n_o
    rng.shuffle(todo)
    center = np.full(3, 0.5 * box)
    pos = np.zeros((0, 3))
    for _ in todo:
        for _attempt in range(MAX_ATTEMPTS):
            p = center + random_orientation(rng) * radius * rng.random() ** (1.0 / 3.0)
            if not len(pos) or np.min(np.linalg.norm(pos - p, axis=1)) >= min_distance:
                break
        else:
            raise PlacementError("random cluster packing failed")
        pos = np.vstack([pos, p])
    return Structure(np.eye(3) * box, todo, pos)

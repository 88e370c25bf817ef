import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aloxbench.geometry import build_neighbor_list, distance_matrix, minimum_image, minimum_image_many
from aloxbench.structure import Structure


def brute_pairs(s: Structure, cutoff: float, reach: int = 2):
    """Every (i, j, image) pair within cutoff by explicit image enumeration."""
    out = set()
    rng = [range(-reach, reach + 1) if p else range(1) for p in s.pbc]
    for n in itertools.product(*rng):
        shift = np.array(n) @ s.cell
        for i in range(len(s)):
            for j in range(len(s)):
                if i == j and not any(n):
                    continue
                d = s.positions[j] + shift - s.positions[i]
                r = np.linalg.norm(d)
                if r <= cutoff:
                    out.add((i, j, tuple(np.round(d, 8))))
    return out


coords = st.floats(0.0, 1.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coords, coords, coords), min_size=2, max_size=8),
       st.floats(2.0, 6.0), st.sampled_from(["brute", "tree", "auto"]))
def test_neighbor_list_matches_image_enumeration(fracs, cutoff, method):
    cell = np.array([[6.0, 0, 0], [1.0, 7.0, 0], [0.5, -0.8, 6.5]])
    s = Structure(cell, [0] * len(fracs), np.array(fracs) @ cell)
    nl = build_neighbor_list(s, cutoff, method="tree" if method == "brute" and cutoff > 2.9 else method)
    def off_boundary(pairs):
        # pairs sitting on the cutoff to rounding error may land either way
        return {p for p in pairs if abs(np.linalg.norm(p[2]) - cutoff) > 1e-7}

    assert off_boundary(nl.pair_set()) == off_boundary(brute_pairs(s, cutoff))


def test_small_cell_needs_multiple_images():
    s = Structure(np.eye(3) * 2.0, [0], [[0.0, 0.0, 0.0]])
    nl = build_neighbor_list(s, 4.1)
    # self images at |n| * 2 A with |n|^2 <= 4: 6 + 12 + 8 + 6 = 32
    assert len(nl) == 32
    assert nl.pair_set() == brute_pairs(s, 4.1)


def test_non_periodic_axes():
    s = Structure(np.eye(3) * 5.0, [0, 0], [[0.5, 0.5, 0.5], [4.5, 0.5, 0.5]], pbc=(False, True, True))
    nl = build_neighbor_list(s, 3.0)
    assert len(nl) == 0
    s2 = Structure(np.eye(3) * 5.0, [0, 0], [[0.5, 0.5, 0.5], [0.5, 4.5, 0.5]], pbc=(False, True, True))
    assert len(build_neighbor_list(s2, 3.0)) == 2


def test_neighbor_table_is_symmetric_and_sorted(rng):
    from conftest import random_structure

    s = random_structure(rng, n=20, box=8.0)
    nl = build_neighbor_list(s, 4.0)
    keys = np.lexsort((nl.j, nl.i))
    assert np.array_equal(keys, np.arange(len(nl)))
    assert np.array_equal(np.sort(nl.counts()), np.sort(np.bincount(nl.j, minlength=len(s))))
    assert np.allclose(np.linalg.norm(nl.disp, axis=1), nl.dist)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=3, max_size=3), st.lists(st.floats(-30, 30), min_size=3, max_size=3))
def test_minimum_image_is_shortest(a, b):
    cell = np.diag([5.0, 6.0, 7.0])
    d = minimum_image(cell, np.array(a), np.array(b))
    raw = np.array(b) - np.array(a)
    # same lattice class and no image is shorter
    frac = np.linalg.solve(cell.T, d - raw)
    assert np.allclose(frac, np.round(frac), atol=1e-9)
    assert np.all(np.abs(d) <= np.diag(cell) / 2 + 1e-9)


def test_minimum_image_triclinic_matches_scan():
    cell = np.array([[5.0, 0, 0], [4.0, 3.0, 0], [0, 0, 5.0]])
    rng = np.random.default_rng(0)
    d = rng.normal(size=(200, 3)) * 4
    mi = minimum_image_many(cell, (True, True, True), d)
    shifts = np.array(list(itertools.product(range(-7, 8), repeat=3))) @ cell
    best = np.min(np.linalg.norm(d[:, None, :] + shifts[None], axis=2), axis=1)
    assert np.allclose(np.linalg.norm(mi, axis=1), best)


def test_distance_matrix_symmetric():
    s = Structure(np.eye(3) * 4, [0, 1, 0], [[0, 0, 0], [3.5, 0, 0], [0, 2, 0]])
    D = distance_matrix(s)
    assert np.allclose(D, D.T)
    assert D[0, 1] == pytest.approx(0.5)

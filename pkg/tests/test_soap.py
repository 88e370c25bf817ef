import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aloxbench.descriptors.soap import (SoapParams, fingerprint_distance, pairwise_distances, real_sph_harm,
                                        soap_compute)
from aloxbench.errors import DataError
from aloxbench.structure import Structure

from conftest import random_structure

SMALL = SoapParams(n_max=4, l_max=3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_rotation_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    s = random_structure(rng, n=10, box=14.0, pbc=(False, False, False))
    fp = soap_compute(s, SMALL)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    perm = rng.permutation(len(s))
    moved = Structure(s.cell, s.species_ids[perm], (s.positions[perm] - 7) @ q.T + 7, s.pbc)
    fp2 = soap_compute(moved, SMALL)
    assert np.max(np.abs(fp2.vector - fp.vector[perm])) < 1e-8
    assert np.max(np.abs(fp2.structure_vector - fp.structure_vector)) < 1e-8


def test_unit_norm_and_dimensions(rng):
    s = random_structure(rng, n=12, box=9.0)
    fp = soap_compute(s, SMALL)
    assert fp.vector.shape == (12, SMALL.dim)
    assert np.allclose(np.linalg.norm(fp.vector, axis=1), 1.0)
    assert np.linalg.norm(fp.structure_vector) == pytest.approx(1.0)
    assert len(fp.structure_vector) == SMALL.structure_dim


def test_distance_properties(rng):
    a = soap_compute(random_structure(rng, n=8, box=9.0), SMALL).structure_vector
    b = soap_compute(random_structure(rng, n=8, box=9.0), SMALL).structure_vector
    assert fingerprint_distance(a, a) == pytest.approx(0.0, abs=1e-7)
    d = fingerprint_distance(a, b)
    assert 0 < d <= 2 and d == pytest.approx(fingerprint_distance(b, a))
    assert pairwise_distances(np.array([a, b]), np.array([a]))[1, 0] == pytest.approx(d)
    with pytest.raises(DataError):
        fingerprint_distance(a, b[:-1])


def test_different_environments_differ(rng):
    s = random_structure(rng, n=10, box=10.0)
    squeezed = s.with_positions(s.positions * 0.8)
    d = fingerprint_distance(soap_compute(s, SMALL).structure_vector, soap_compute(squeezed, SMALL).structure_vector)
    assert d > 1e-3


def test_real_harmonics_addition_theorem(rng):
    u = rng.normal(size=(5, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    Y = real_sph_harm(4, u)
    for l in range(5):
        block = Y[:, l * l:(l + 1) ** 2]
        assert np.allclose(np.sum(block**2, axis=1), (2 * l + 1) / (4 * np.pi))

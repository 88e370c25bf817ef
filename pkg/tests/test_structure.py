import numpy as np
import pytest

from aloxbench import UNITS
from aloxbench.errors import DataError, GeometryError
from aloxbench.structure import AL, MASSES, O, Frame, LabeledFrame, Structure, cluster
from aloxbench.units import FORCE_TO_ACCEL, KB


def test_units_are_consistent():
    assert KB == pytest.approx(8.617333262e-5)
    # 1 eV/(A amu) in A/fs^2
    assert FORCE_TO_ACCEL == pytest.approx(9.648533e-3, rel=1e-6)
    h = UNITS.header()
    assert h["length"] == "angstrom" and h["energy"] == "electronvolt"


def test_structure_validation():
    with pytest.raises(GeometryError):
        Structure(np.eye(2), [0], [[0, 0, 0]])
    with pytest.raises(DataError):
        Structure(np.eye(3), [0, 1], [[0, 0, 0]])
    with pytest.raises(DataError):
        Structure(np.eye(3), [7], [[0, 0, 0]])
    with pytest.raises(DataError):
        Structure(np.eye(3), [0], [[np.nan, 0, 0]])
    with pytest.raises(GeometryError):
        Structure(np.zeros((3, 3)), [0], [[0, 0, 0]])
    # a singular cell is fine when nothing is periodic
    Structure(np.zeros((3, 3)), [0], [[0, 0, 0]], pbc=(False, False, False))


def test_structure_is_immutable():
    s = Structure(np.eye(3) * 5, [0, 1], [[0, 0, 0], [1, 1, 1]])
    with pytest.raises(ValueError):
        s.positions[0, 0] = 3.0


def test_masses_symbols_counts():
    s = cluster(["Al", "O", "O"], np.zeros((3, 3)) + np.arange(3)[:, None])
    assert s.symbols == ["Al", "O", "O"]
    assert np.allclose(s.masses, [MASSES[AL], MASSES[O], MASSES[O]])
    assert s.count(O) == 2 and s.count(AL) == 1
    assert s.pbc == (False, False, False)


def test_wrapped_keeps_fractional_coordinates_in_unit_interval():
    s = Structure(np.diag([4.0, 5.0, 6.0]), [0, 0], [[-1.0, 11.0, 6.0], [3.0, 2.0, 1.0]])
    w = s.wrapped()
    frac = w.positions @ np.linalg.inv(w.cell)
    assert np.all(frac >= 0) and np.all(frac < 1)
    assert np.allclose(w.positions[0], [3.0, 1.0, 0.0])


def test_frame_and_labeled_frame_shapes():
    s = Structure(np.eye(3) * 5, [0, 1], [[0, 0, 0], [1, 1, 1]])
    with pytest.raises(DataError):
        Frame(s, velocities=np.zeros((3, 3)))
    with pytest.raises(DataError):
        LabeledFrame(Frame(s), 0.0, np.zeros((1, 3)))
    lf = LabeledFrame(Frame(s, tag="a/b"), 1, np.zeros((2, 3)))
    assert lf.tag == "a/b" and isinstance(lf.energy, float) and len(lf) == 2

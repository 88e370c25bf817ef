import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aloxbench.analysis.census import CensusCriteria, species_census
from aloxbench.analysis.density import density_slice
from aloxbench.analysis.kinetics import kinetics_series
from aloxbench.analysis.msd import diffusion_fit, msd_compute, msd_fft, radial_band_filter
from aloxbench.analysis.radial import particle_center, radial_profile
from aloxbench.analysis.tables import read_table, write_table
from aloxbench.dynamics.trajectory import Trajectory
from aloxbench.errors import ConfigError, DataError, FitError
from aloxbench.structure import AL, O, Frame, Structure


def walk_trajectory(rng, n_atoms=20, steps=400, sigma=0.3, box=10.0, dt=2.0):
    """Gaussian random walk wrapped into a periodic box."""
    x = np.cumsum(rng.normal(scale=sigma, size=(steps, n_atoms, 3)), axis=0) + rng.random((1, n_atoms, 3)) * box
    s = Structure(np.eye(3) * box, [AL] * n_atoms, np.mod(x[0], box))
    return Trajectory([Frame(s.with_positions(np.mod(x[t], box)), time=t * dt) for t in range(steps)]), x


def msd_direct(u, max_lag):
    out = np.zeros(max_lag + 1)
    for k in range(1, max_lag + 1):
        out[k] = np.mean(np.sum((u[k:] - u[:-k]) ** 2, axis=2))
    return out


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.integers(3, 40), st.integers(1, 5))
def test_fft_msd_matches_direct(seed, T, n):
    u = np.random.default_rng(seed).normal(size=(T, n, 3)).cumsum(axis=0)
    lag = (T - 1) // 2
    assert np.allclose(msd_fft(u, lag)[1:], msd_direct(u, lag)[1:], rtol=1e-9, atol=1e-9)


def test_random_walk_diffusion_and_unwrapping():
    rng = np.random.default_rng(0)
    traj, x = walk_trajectory(rng)
    curve = msd_compute(traj)
    assert np.allclose(curve.msd[1:], msd_direct(x, len(curve.msd) - 1)[1:], rtol=1e-8)
    fit = diffusion_fit(curve)
    # each step adds 3 sigma^2 per dt
    assert fit.D == pytest.approx(3 * 0.09 / 2.0 / 6.0, rel=0.15)
    assert fit.valid


def test_region_filter_path_matches_fft_when_selecting_all():
    traj, _ = walk_trajectory(np.random.default_rng(1), steps=60)
    everything = msd_compute(traj, region_filter=lambda p, f: np.ones(len(p), bool))
    assert np.allclose(everything.msd, msd_compute(traj).msd)
    band = msd_compute(traj, region_filter=radial_band_filter(0.0, 3.0))
    assert band.counts[1] < everything.counts[1]


def test_ballistic_motion_is_flagged():
    s = Structure(np.eye(3) * 50, [AL] * 3, np.zeros((3, 3)) + 1.0)
    traj = Trajectory([Frame(s.with_positions(s.positions + 0.01 * t), time=float(t)) for t in range(100)])
    assert diffusion_fit(msd_compute(traj)).ballistic


def test_msd_rejects_uneven_times_and_bad_windows():
    traj, _ = walk_trajectory(np.random.default_rng(2), steps=20)
    uneven = Trajectory([traj[0], traj[1], Frame(traj[2].structure, time=99.0)])
    with pytest.raises(DataError):
        msd_compute(uneven)
    with pytest.raises(FitError):
        diffusion_fit(msd_compute(traj), window=(0.0, 1e6))


def o2_gas_frame(extra=()):
    pos = [[2, 2, 2], [3.2, 2, 2], [10, 10, 10], [11.2, 10, 10], [5, 15, 5], *extra]
    sp = [O, O, O, O, AL] + [AL] * len(extra)
    return Frame(Structure(np.eye(3) * 20, sp, pos))


def _mi(d, L):
    return np.linalg.norm(d - L * np.round(d / L))


def census_brute(frame, c=CensusCriteria()):
    s = frame.structure
    n = len(s)
    d = np.array([[_mi(s.positions[j] - s.positions[i], s.cell[0, 0]) for j in range(n)] for i in range(n)])
    sp = s.species_ids
    o_part = [[j for j in range(n) if j != i and sp[j] == O and d[i, j] <= c.r_OO] for i in range(n)]
    al_near = [any(sp[j] == AL and d[i, j] <= c.r_AlO for j in range(n)) for i in range(n)]
    gas = sum(1 for i in range(n) for j in range(i + 1, n)
              if sp[i] == O and sp[j] == O and o_part[i] == [j] and o_part[j] == [i] and not al_near[i] and not al_near[j])
    return gas


def test_census_counts_and_identities():
    fr = o2_gas_frame()
    c = species_census(fr)
    assert c.n_O2_gas == 2 and c.n_O_bound == 0
    assert c.n_Al_particle == 1 and c.n_Al_vapor == 0
    bound = o2_gas_frame(extra=([11.2, 11.5, 10],))
    c2 = species_census(bound)
    assert c2.n_O2_gas == 1 and c2.n_O_bound == 2 and c2.n_Al_oxidized == 1
    assert 2 * c2.n_O2_gas + c2.n_O_bound == c2.n_O_total
    assert c2.n_Al_particle + c2.n_Al_vapor == c2.n_Al_total


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_census_gas_count_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = 14
    pos = rng.random((n, 3)) * 7.0
    sp = rng.integers(0, 2, n)
    fr = Frame(Structure(np.eye(3) * 7.0, sp, pos))
    c = species_census(fr)
    assert c.n_O2_gas == census_brute(fr)
    assert 2 * c.n_O2_gas + c.n_O_bound == c.n_O_total


def test_radial_profile_and_center():
    s = Structure(np.eye(3) * 20, [AL, AL, O, O], [[10, 10, 10], [10, 10, 12], [10, 10, 15.5], [10, 16, 11]])
    fr = Frame(s)
    assert np.allclose(particle_center(fr), [10, 10, 11])
    prof = radial_profile([fr], edges=[0, 2, 4, 6])
    assert prof.counts[0, AL].tolist() == [2, 0, 0]
    assert prof.counts[0, O].tolist() == [0, 0, 1]
    assert prof.density[0, AL, 0] == pytest.approx(2 / (4 / 3 * np.pi * 8))
    with pytest.raises(ConfigError):
        radial_profile([fr], edges=[0, 3, 2])


def test_density_slice_integrates_to_counts():
    rng = np.random.default_rng(4)
    s = Structure(np.eye(3) * 12, rng.integers(0, 2, 40), rng.random((40, 3)) * 12)
    sl = density_slice([Frame(s)], axis=2, slab=(6.0, 4.0), spacing=0.25, sigma=0.8)
    total = sl.maps.sum(axis=(1, 2)) * sl.cell_area
    assert np.allclose(total, sl.counts, rtol=1e-3)
    assert not sl.undersampled


def test_kinetics_series_marks_insertions(tmp_path):
    a = o2_gas_frame()
    b = Frame(Structure(np.eye(3) * 20, [*a.structure.species_ids, O, O],
                        [*a.structure.positions, [15, 2, 2], [16.2, 2, 2]]), time=10.0)
    tab = kinetics_series([a, b])
    assert tab.events == [(10.0, 2)]
    assert tab.o2_consumed() == [0.0, 0.0]
    tab.write(tmp_path / "k.txt")
    header, cols, rows = read_table(tmp_path / "k.txt")
    assert header["units"]["length"] == "angstrom"
    assert rows[1][cols.index("replenish_event")] == 1


def test_table_round_trip(tmp_path):
    write_table(tmp_path / "t.txt", ["a", "b", "c"], [[1, 2.5, "x"], [True, 1e-9, "y"]], {"k": [1, 2]})
    header, cols, rows = read_table(tmp_path / "t.txt")
    assert header == {"k": [1, 2]} and cols == ["a", "b", "c"]
    assert rows == [[1, 2.5, "x"], [1, 1e-9, "y"]]

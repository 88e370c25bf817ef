"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary. The end-to-end loop and the Langevin run take a few minutes.
"""

import time

import numpy as np
import pytest
from scipy import stats

from aloxbench.analysis.census import CensusCriteria, species_census
from aloxbench.analysis.kinetics import kinetics_series
from aloxbench.analysis.msd import diffusion_fit, msd_compute
from aloxbench.committee import Committee
from aloxbench.curation import dedup_candidates, fps_select
from aloxbench.descriptors.acsf import AcsfParams, acsf_compute
from aloxbench.descriptors.soap import SoapParams, soap_compute
from aloxbench.dynamics import ReplenishPolicy, SceneSpec, build_scene, oxidation_run
from aloxbench.dynamics.md import MdConfig, kinetic_energy, maxwell_boltzmann, md_run
from aloxbench.dynamics.scene import quench, random_cluster
from aloxbench.dynamics.tfmc import displacement_scale, sample_xi
from aloxbench.dynamics.trajectory import Trajectory
from aloxbench.loop import LoopController, init_workspace, strip_wall_times, toy_run_config
from aloxbench.oracle import PairPotential
from aloxbench.structure import AL, O, Frame, Structure
from aloxbench.units import KB

from conftest import random_structure

pytestmark = pytest.mark.slow

E2E_ITERATIONS = 5
BENCHMARK_STEPS = 2000
BENCHMARK_EVERY = 20  # 100 frames per temperature, 300 in total


def run_toy_loop(root):
    t0 = time.perf_counter()
    ws = init_workspace(root, toy_run_config(), benchmark_steps=BENCHMARK_STEPS, benchmark_every=BENCHMARK_EVERY)
    ctl = LoopController(ws)
    reports = []
    for k in range(E2E_ITERATIONS):
        reports.append(ctl.run_iteration())
        if k + 1 < E2E_ITERATIONS:
            entry = ctl.decide("refine", "scripted")
            if not entry["effective"]:
                break
    return ws, reports, time.perf_counter() - t0


@pytest.fixture(scope="module")
def toy_loop(tmp_path_factory):
    return run_toy_loop(tmp_path_factory.mktemp("e2e") / "ws")


def test_end_to_end_convergence(toy_loop, criterion):
    ws, reports, seconds = toy_loop
    first, last = reports[0], reports[-1]
    n_atoms = len(ws.scenes()[0].structure)
    r0, r1 = first.benchmark.force_rmse, last.benchmark.force_rmse
    ok = (len(reports) >= 5 and r1 <= r0 / 3 and last.candidate_fraction < first.candidate_fraction
          and seconds <= 15 * 60 and n_atoms <= 300)
    criterion("end-to-end loop", ok,
              f"{len(reports)} iterations, scene {n_atoms} atoms, held-out force RMSE {r0:.4f} -> {r1:.4f} eV/A "
              f"(ratio {r1 / r0:.3f} <= 0.333), candidate fraction {first.candidate_fraction:.3f} -> "
              f"{last.candidate_fraction:.3f}, {seconds:.0f} s")
    assert ok


def test_uncertainty_validity(toy_loop, criterion):
    ws, _, _ = toy_loop
    bench = ws.benchmark()
    committee = Committee.load(ws.model_path(1))
    eps, err = [], []
    for lf in bench:
        pred = committee.predict(lf.structure)
        eps.append(pred.epsilon_f)
        err.append(np.max(np.linalg.norm(pred.mean_forces - lf.forces, axis=1)))
    rho = stats.spearmanr(eps, err).statistic
    ok = len(bench) >= 200 and rho >= 0.3
    criterion("uncertainty validity", ok, f"Spearman {rho:.3f} >= 0.3 on {len(bench)} held-out frames")
    assert ok


def test_oracle_force_consistency(criterion):
    pot = PairPotential()
    worst = 0.0
    h = 1e-4
    for seed in range(20):
        s = random_cluster(10, 6, seed=seed, box=20.0)
        f = pot.compute(s)[1]
        fd = np.zeros_like(f)
        for a in range(len(s)):
            for x in range(3):
                p = s.positions.copy()
                p[a, x] += h
                ep = pot.compute(s.with_positions(p))[0]
                p[a, x] -= 2 * h
                fd[a, x] = -(ep - pot.compute(s.with_positions(p))[0]) / (2 * h)
        worst = max(worst, np.max(np.abs(f - fd)) / np.max(np.abs(f)))
    ok = worst < 1e-6
    criterion("oracle force consistency", ok, f"max relative error {worst:.2e} < 1e-6 over 20 16-atom clusters")
    assert ok


def test_acsf_gradients(criterion):
    worst = 0.0
    h = 1e-5
    for angular in (False, True):
        params = AcsfParams(angular_enabled=angular)
        for seed in range(3):
            s = random_cluster(5, 3, seed=seed, box=20.0)
            jac = acsf_compute(s, params).dense_gradients()
            fd = np.zeros_like(jac)
            for a in range(len(s)):
                for x in range(3):
                    p = s.positions.copy()
                    p[a, x] += h
                    gp = acsf_compute(s.with_positions(p), params).values
                    p[a, x] -= 2 * h
                    fd[:, :, a, x] = (gp - acsf_compute(s.with_positions(p), params).values) / (2 * h)
            worst = max(worst, np.max(np.abs(jac - fd)) / np.max(np.abs(jac)))
    ok = worst < 1e-5
    criterion("ACSF gradient check", ok, f"max relative error {worst:.2e} < 1e-5 (radial and angular)")
    assert ok


def test_soap_invariances(criterion):
    params = SoapParams()
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        s = random_structure(rng, n=12, box=14.0, pbc=(False, False, False))
        fp = soap_compute(s, params)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        perm = rng.permutation(len(s))
        moved = Structure(s.cell, s.species_ids[perm], (s.positions[perm] - 7.0) @ q.T + 7.0, s.pbc)
        worst = max(worst, np.max(np.abs(soap_compute(moved, params).vector - fp.vector[perm])))
    ok = worst < 1e-8
    criterion("SOAP invariances", ok, f"max per-atom deviation {worst:.2e} < 1e-8 over 100 clusters")
    assert ok


def test_nve_conservation(criterion):
    pot = PairPotential()
    s = quench(random_cluster(32, 0, seed=0, box=30.0), pot)
    v = maxwell_boltzmann(s.masses, 300.0, np.random.default_rng(0))
    traj = md_run(Frame(s, v), pot, MdConfig(dt=0.5, steps=20_000, snapshot_every=100))
    e = np.array(traj.energies)
    drift = np.max(np.abs(e - e[0])) / abs(e[0])
    ok = drift < 1e-4
    criterion("NVE conservation", ok, f"|dE|/|E0| = {drift:.2e} < 1e-4 (32 atoms, 20000 steps of 0.5 fs)")
    assert ok


def test_langevin_equilibration(criterion):
    pot = PairPotential()
    s = quench(random_cluster(64, 0, seed=1, box=40.0), pot)
    T = 300.0
    cfg = MdConfig(dt=0.5, steps=100_000, snapshot_every=10, thermostat="langevin", temperature=T, seed=0)
    traj = md_run(Frame(s), pot, cfg)
    ke = np.array([kinetic_energy(f.structure.masses, f.velocities) for f in traj])
    ratio = ke[len(ke) // 10:].mean() / (1.5 * len(s) * KB * T)
    ok = abs(ratio - 1.0) < 0.05
    criterion("Langevin equilibration", ok, f"<KE> / (3/2 N kB T) = {ratio:.4f}, within 5% (64 atoms, 1e5 steps)")
    assert ok


def test_tfmc_statistics(criterion):
    rng = np.random.default_rng(0)
    u = rng.random(100_000)
    xi = sample_xi(np.zeros_like(u), u)
    p_ks = stats.kstest((xi + 1.0) / 2.0, "uniform").pvalue
    errs = {}
    for g in (0.1, 0.5, 1.0, 2.0):
        draws = sample_xi(np.full(4_000_000, g), rng.random(4_000_000))
        expect = 1.0 / np.tanh(2 * g) - 1.0 / (2 * g)
        errs[g] = abs(draws.mean() - expect) / expect
    scale = displacement_scale(np.array([1.0, 16.0]), 0.2)
    ratio = scale[0] / scale[1]
    ok = p_ks > 0.01 and max(errs.values()) < 0.02 and ratio == 2.0
    criterion("tfMC statistics", ok,
              f"KS p = {p_ks:.3f} > 0.01 (1e5 draws); drift rel. errors "
              + ", ".join(f"{g:g}: {e:.2%}" for g, e in errs.items()) + f" < 2%; mass-16 ratio {float(ratio)!r}")
    assert ok


def _chord(a, b):
    return np.sqrt(max(0.0, 2.0 - 2.0 * float(a @ b)))


def _fps_reference(X, m, first):
    picks = [first]
    while len(picks) < m:
        best, best_d = -1, -1.0
        for i in range(len(X)):
            if i in picks:
                continue
            d = min(_chord(X[i], X[j]) for j in picks)
            if d > best_d:
                best, best_d = i, d
        picks.append(best)
    return picks


def _dedup_reference(E, C, d_min):
    kept = []
    for k in range(len(C)):
        if all(_chord(C[k], e) > d_min for e in E) and all(_chord(C[k], C[j]) > d_min for j in kept):
            kept.append(k)
    return kept


def _unit(rng, n, d):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def test_fps_dedup_equivalence(criterion):
    mismatches = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 201))
        X = _unit(rng, n, 6)
        m = min(n, 30)
        c = X - X.mean(axis=0)
        first = int(np.argmax(np.einsum("ij,ij->i", c, c)))
        if fps_select(X, m, start="max-norm-from-centroid").indices.tolist() != _fps_reference(X, m, first):
            mismatches += 1
        E, C = _unit(rng, 50, 3), _unit(rng, n, 3)
        if dedup_candidates(E, C, 0.3).tolist() != _dedup_reference(E, C, 0.3):
            mismatches += 1
    ok = mismatches == 0
    criterion("FPS and dedup equivalence", ok, f"{mismatches} mismatches against quadratic references (20 seeds)")
    assert ok


def test_diffusion_pipeline(criterion):
    rng = np.random.default_rng(0)
    n, steps, sigma, dt, box = 400, 1000, 0.2, 5.0, 15.0
    x = np.cumsum(rng.normal(scale=sigma, size=(steps, n, 3)), axis=0) + rng.random((1, n, 3)) * box
    base = Structure(np.eye(3) * box, [O] * n, np.mod(x[0], box))
    traj = Trajectory([Frame(base.with_positions(np.mod(x[t], box)), time=t * dt) for t in range(steps)])
    fit = diffusion_fit(msd_compute(traj))
    true_d = sigma**2 / (2 * dt)
    err = abs(fit.D - true_d) / true_d
    s = Structure(np.eye(3) * 50, [AL] * 4, np.full((4, 3), 10.0))
    vel = rng.normal(size=(4, 3)) * 0.01
    ballistic = Trajectory([Frame(s.with_positions(s.positions + vel * t), time=float(t)) for t in range(200)])
    flagged = diffusion_fit(msd_compute(ballistic)).ballistic
    ok = err < 0.05 and flagged and fit.valid
    criterion("diffusion pipeline", ok, f"planted D recovered within {err:.2%} (< 5%); ballistic flagged: {flagged}")
    assert ok


def _census_brute(s, c=CensusCriteria()):
    n = len(s)
    L = s.cell[0, 0]
    d = s.positions[None, :, :] - s.positions[:, None, :]
    d = np.linalg.norm(d - L * np.round(d / L), axis=2)
    np.fill_diagonal(d, np.inf)
    sp = s.species_ids
    o_partners = [[j for j in range(n) if sp[j] == O and d[i, j] <= c.r_OO] for i in range(n)]
    near_al = [any(sp[j] == AL and d[i, j] <= c.r_AlO for j in range(n)) for i in range(n)]
    gas = 0
    for i in range(n):
        for j in range(i + 1, n):
            if (sp[i] == O and sp[j] == O and o_partners[i] == [j] and o_partners[j] == [i]
                    and not near_al[i] and not near_al[j]):
                gas += 1
    al = [i for i in range(n) if sp[i] == AL]
    label = {i: i for i in al}

    def root(i):
        while label[i] != i:
            i = label[i]
        return i

    for i in al:
        for j in al:
            if i < j and d[i, j] <= c.r_AlAl:
                label[root(j)] = root(i)
    groups = {}
    for i in al:
        groups.setdefault(root(i), []).append(i)
    particle = max((len(g), -min(g)) for g in groups.values())[0] if groups else 0
    oxidized = sum(1 for i in al if any(sp[j] == O and d[i, j] <= c.r_AlO for j in range(n)))
    n_o = int(np.sum(sp == O))
    return gas, n_o - 2 * gas, particle, len(al) - particle, oxidized


def test_species_census(criterion):
    bad = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        s = Structure(np.eye(3) * 11.0, rng.integers(0, 2, 50), rng.random((50, 3)) * 11.0)
        c = species_census(Frame(s))
        got = (c.n_O2_gas, c.n_O_bound, c.n_Al_particle, c.n_Al_vapor, c.n_Al_oxidized)
        identities = (2 * c.n_O2_gas + c.n_O_bound == c.n_O_total and c.n_Al_particle + c.n_Al_vapor == c.n_Al_total
                      and c.n_Al_oxidized <= c.n_Al_total)
        if got != _census_brute(s) or not identities:
            bad += 1
    ok = bad == 0
    criterion("species census equivalence", ok, f"{bad} of 100 random 50-atom frames disagree or break identities")
    assert ok


def test_determinism(toy_loop, tmp_path, criterion):
    ws_a, reports, _ = toy_loop
    ws_b, _, _ = run_toy_loop(tmp_path / "again")
    files = sorted(p.relative_to(ws_a.root / "dataset") for p in (ws_a.root / "dataset").rglob("*") if p.is_file())
    same_data = files == sorted(p.relative_to(ws_b.root / "dataset")
                                for p in (ws_b.root / "dataset").rglob("*") if p.is_file())
    same_data = same_data and all((ws_a.root / "dataset" / f).read_bytes() == (ws_b.root / "dataset" / f).read_bytes()
                                  for f in files)
    same_reports = ws_a.iterations() == ws_b.iterations() and all(
        strip_wall_times(ws_a.report_path(k).read_text()) == strip_wall_times(ws_b.report_path(k).read_text())
        for k in ws_a.iterations())
    ok = same_data and same_reports
    criterion("determinism", ok, f"datasets identical: {same_data}; {len(reports)} reports identical: {same_reports}")
    assert ok


def test_kinetics_ordering(criterion):
    pot = PairPotential()
    scene = build_scene(SceneSpec(particle_radius=5.0, box_length=20.0, n_O2=4, seed=0), pot)
    policy = ReplenishPolicy(target_n_O2=4, period=200)
    consumed = {}
    for T in (300.0, 1500.0):
        traj = oxidation_run(scene, pot, T, 10_000, policy, snapshot_every=500, seed=1)
        consumed[T] = kinetics_series(traj).o2_consumed()[-1]
    ok = consumed[1500.0] >= consumed[300.0]
    criterion("kinetics ordering", ok,
              f"O2 consumed after 5 ps: {consumed[300.0]:g} at 300 K, {consumed[1500.0]:g} at 1500 K (high >= low)")
    assert ok

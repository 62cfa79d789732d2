"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
import scipy.linalg as sla

from cgmn import cli
from cgmn import experiments as ex
from cgmn.discretization import analytic_eigenpair_1d, build_helmholtz_1d
from cgmn.oracle import IDENTITIES, build_dense_QR, oracle_helmholtz_1d, verify_identities, verify_propagation
from cgmn.solver import SolverConfig, cgmn_solve
from cgmn.sweeps import SweepPlan, double_sweep
from cgmn.symbol import SymbolParams, amplitude, default_theta_grid, optimal_omega

ORACLE_SIZES = (5, 8, 16, 32)
ORACLE_OMEGAS = (0.5, 1.0, 1.5, 1.9)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_optimal_omega_anchor(report, tmp_path, capsys):
    t0 = time.perf_counter()
    code = cli.main(["symbol", "--ng", "10", "--out", str(tmp_path / "surface.csv")])
    elapsed = time.perf_counter() - t0
    printed = capsys.readouterr().out
    rows = (tmp_path / "surface_proxy.csv").read_text().splitlines()[1:]
    argmin = [float(r.split(",")[0]) for r in rows if r.endswith(",1")]
    ok = code == 0 and len(argmin) == 1 and 1.4 <= argmin[0] <= 1.6 and elapsed < 1.0
    ok = ok and f"{argmin[0]:.3f}" in printed
    report(1, "optimal omega at n_g = 10", ok, f"argmin {argmin}, {elapsed:.2f} s (need [1.4, 1.6], < 1 s)")


def test_criterion_02_identity_suite(report):
    t0 = time.perf_counter()
    rep = verify_identities(ORACLE_SIZES, ORACLE_OMEGAS, tolerance=1e-12, include_random=False)
    elapsed = time.perf_counter() - t0
    worst = max(rep.max_deviation.values())
    ok = rep.passed and set(rep.max_deviation) == set(IDENTITIES) and len(rep.cases) == 16
    ok = ok and worst <= 1e-12 and elapsed < 10.0
    report(2, "SSOR/Kaczmarz identities", ok, f"worst {worst:.2e} over 16 cases, {elapsed:.2f} s (need <= 1e-12, < 10 s)")


def test_criterion_03_sweep_matches_dense_product(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for n in (8, 32):
        matrix = oracle_helmholtz_1d(n).matrix
        plans = [SweepPlan.constant(n, 1.5), SweepPlan.per_row(rng.uniform(0.3, 1.9, n))]
        for plan in plans:
            Q, R = build_dense_QR(matrix, plan.omega)
            for _ in range(20):
                u, s = rng.standard_normal(n), rng.standard_normal(n)
                expected = Q @ u + R @ s
                got = double_sweep(u.copy(), matrix, s, plan)
                worst = max(worst, np.max(np.abs(got - expected)) / np.max(np.abs(expected)))
    elapsed = time.perf_counter() - t0
    report(3, "double sweep vs dense Qu + Rs", worst <= 1e-12 and elapsed < 5.0,
           f"worst relative {worst:.2e}, {elapsed:.2f} s (need <= 1e-12, < 5 s)")


def test_criterion_04_spectrum(report):
    n = 32
    matrix = oracle_helmholtz_1d(n).matrix
    asym = 0.0
    lo, hi, lo_iq = math.inf, -math.inf, math.inf
    for omega in ORACLE_OMEGAS:
        Q, _ = build_dense_QR(matrix, omega)
        asym = max(asym, np.max(np.abs(Q - Q.T)))
        ev = np.linalg.eigvalsh((Q + Q.T) / 2)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
        lo_iq = min(lo_iq, np.linalg.eigvalsh(np.eye(n) - (Q + Q.T) / 2)[0])
    ok = asym <= 1e-12 and lo >= -1 - 1e-10 and hi <= 1 + 1e-10 and lo_iq >= -1e-10
    report(4, "spectrum of Q", ok, f"asymmetry {asym:.1e}, eig(Q) in [{lo:.6f}, {hi:.12f}], "
                                   f"min eig(I-Q) {lo_iq:.1e}")


def test_criterion_05_eigenpairs(report):
    worst = 0.0
    for n in (10, 50):
        k = 2 * math.pi * (n + 1) / 10
        p = build_helmholtz_1d(k, n)
        for m in range(1, n + 1):
            lam, v = analytic_eigenpair_1d(m, k, p.grid)
            worst = max(worst, np.linalg.norm(p.matrix @ v - lam * v) / np.linalg.norm(v))
    report(5, "analytic eigenpairs", worst <= 1e-10, f"worst ||Av - lv||/||v|| = {worst:.2e} (need <= 1e-10)")


def test_criterion_06_solver_correctness(report):
    worst, solves, zero_ok = 0.0, 0, True
    for k in ex.DEFAULT_K_VALUES:
        n = ex.interior_points_for(k, 10.0)
        p = build_helmholtz_1d(k, n).with_rhs(ex.source_1d(n))
        exact = sla.lu_solve(sla.lu_factor(p.matrix.toarray()), p.rhs)
        for omega in ex.DEFAULT_OMEGA_GRID:
            u, hist = cgmn_solve(p, SweepPlan.constant(n, omega), SolverConfig(tolerance=1e-6))
            if not hist.converged:
                worst = math.inf
            worst = max(worst, np.linalg.norm(u - exact) / np.linalg.norm(exact))
            solves += 1
        u0, h0 = cgmn_solve(p.with_rhs(np.zeros(n)), SweepPlan.constant(n, 1.5))
        zero_ok = zero_ok and h0.iterations == 0 and h0.converged and not np.any(u0)
    ok = worst <= 1e-5 and zero_ok
    report(6, "CGMN vs dense solve", ok, f"worst relative error {worst:.2e} over {solves} solves, "
                                         f"zero rhs {'ok' if zero_ok else 'broken'} (need <= 1e-5)")


def test_criterion_07_prediction_vs_practice(report):
    t0 = time.perf_counter()
    table = ex.run_fixed_ng_1d(ex.DEFAULT_K_VALUES, n_g=10.0, omega_grid=ex.DEFAULT_OMEGA_GRID, tolerance=1e-6)
    elapsed = time.perf_counter() - t0
    predicted = optimal_omega(10.0)
    found = ex.empirical_optima(table)
    gaps = {k: abs(emp - pred) for k, (emp, pred) in found.items()}
    ok = len(found) == len(ex.DEFAULT_K_VALUES) and max(gaps.values()) <= 0.1 + 1e-12 and elapsed < 120
    ok = ok and all(pred == predicted for _, pred in found.values())
    detail = ", ".join(f"k={k / math.pi:g}pi: {emp:.2f}" for k, (emp, _) in found.items())
    report(7, "empirical vs predicted omega", ok, f"{detail} vs {predicted:.3f}, {elapsed:.1f} s (need +-0.1, < 120 s)")


def test_criterion_08_h_invariance(report):
    theta = default_theta_grid(256)
    omegas = np.linspace(0.01, 1.99, 199)[:, None]
    worst = 0.0
    for ng in (2.5, 4.0, 10.0, 20.0, 50.0):
        a = amplitude(theta, SymbolParams(ng, spacing=1 / 101), omegas)
        b = amplitude(theta, SymbolParams(ng, spacing=1 / 202), omegas)
        worst = max(worst, np.max(np.abs(a - b) / np.abs(a)))
    report(8, "amplitude h-invariance", worst <= 1e-12, f"worst relative {worst:.2e} (need <= 1e-12)")


def test_criterion_09_contrast_2d(report):
    t0 = time.perf_counter()
    counts = {}
    for policy in ("local", 1.5, 1.95):
        res = ex.run_contrast_2d(omega_policy=policy)
        counts[policy] = res.history.iterations if res.history.converged else math.inf
    homogeneous = ex.run_contrast_2d(anomaly_k=res.background_k)
    elapsed = time.perf_counter() - t0
    zero = homogeneous.history.iterations == 0 and not np.any(homogeneous.scattered)
    ok = counts["local"] <= max(counts[1.5], counts[1.95]) and zero and elapsed < 300
    report(9, "2D local omega policy", ok, f"iterations local {counts['local']}, 1.5 {counts[1.5]}, "
                                           f"1.95 {counts[1.95]}; homogeneous zero field {zero}; {elapsed:.1f} s")


def test_criterion_10_error_propagation(report):
    n = 12
    k = 2 * math.pi * (n + 1) / 10
    p = build_helmholtz_1d(k, n).with_rhs(np.random.default_rng(12).standard_normal(n))
    worst_e = worst_r = 0.0
    ok = True
    for omega in ORACLE_OMEGAS:
        rep = verify_propagation(p, SweepPlan.constant(n, omega), iterations=10, tolerance=1e-10)
        ok = ok and rep.passed and len(rep.error_norms) == 11
        worst_e, worst_r = max(worst_e, rep.max_error_deviation), max(worst_r, rep.max_residual_deviation)
    report(10, "error and residual propagation", ok and worst_e <= 1e-10 and worst_r <= 1e-10,
           f"e: {worst_e:.1e}, Ae: {worst_r:.1e} over 10 steps (need <= 1e-10)")

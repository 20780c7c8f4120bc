"""Acceptance criteria, each at its stated tolerance and time budget.

Every test appends one PASS/FAIL line to the summary printed at the end of
the pytest run (see conftest.py), then asserts.
"""

from __future__ import annotations

import math
import time

import pytest

from conftest import ACCEPTANCE_LINES, GRID_Q, GRID_TAU
from pareto_potts import core
from pareto_potts.asymptotics import bounds, gamma_c_envelope
from pareto_potts.core import ModelParams
from pareto_potts.quadrature import c_tau
from pareto_potts.solvers import (
    RootSolveConfig,
    critical_summary,
    solve_homogeneous,
    solve_T,
    solve_tc_p,
    solve_tc_pp,
)
from pareto_potts.cli import main as cli_main
from pareto_potts.verifier import verify_grid

CFG = RootSolveConfig()
MARGIN = 10 * CFG.tol_t


def record(label: str, passed: bool, elapsed: float, budget: float, detail: str) -> None:
    ok = passed and elapsed < budget
    timing = f"{elapsed:.2f}s/{budget:g}s"
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label:<46} [{timing}] {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert passed, detail
    assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"


def test_c1_reference_values_q20():
    t0 = time.perf_counter()
    T = solve_T(20.0, CFG)
    expect_tcp = {6: 3.1829, 11: 3.7205, 18: 3.9245}
    expect_step = {6: 3.1436, 11: 3.7257, 18: 3.9294}
    devs, relations = [abs(T - 4.1914)], []
    for tau in (6, 11, 18):
        tcp = solve_tc_p(ModelParams(20, tau), CFG, T=T)
        step = (tau - 3) / (tau - 2) * T
        devs += [abs(tcp - expect_tcp[tau]), abs(step - expect_step[tau])]
        relations.append(step < tcp if tau == 6 else step > tcp)
    elapsed = time.perf_counter() - t0
    worst = max(devs)
    record("1 q=20 values and step-vs-root relations", worst <= 5e-4 and all(relations), elapsed, 5,
           f"max |dev| = {worst:.2e}, relations {relations}")


def test_c2_homogeneous_exactness():
    t0 = time.perf_counter()
    worst = 0.0
    for q in (2.5, 3.0, 5.0, 20.0, 100.0):
        b = math.log(q - 1)
        tpp, tp, tc = solve_homogeneous(q, CFG)
        worst = max(worst, abs(tpp - b), abs(tp - solve_T(q, CFG)), abs(tc - 2 * b))
    elapsed = time.perf_counter() - t0
    record("2 homogeneous roots exact", worst <= 1e-10, elapsed, 1, f"max |dev| = {worst:.2e}")


def _identity_errors(q, tau):
    p = ModelParams(q, tau)
    b = p.b
    s = critical_summary(p, CFG)
    at = lambda t: core.evaluate(p, t, CFG.quad)
    two_b = at(2 * b)
    ratio = abs(two_b.k - 2 * b / (tau - 1) * two_b.k_prime) / abs(two_b.k)
    step_tc = abs((2 * b - two_b.k / two_b.k_prime) - 2 * (tau - 2) / (tau - 1) * b) / b
    bt = at(s.T)
    step_tcp = abs(bt.k_prime / bt.k_double_prime - s.T / (tau - 2)) / (s.T / (tau - 2))
    h = 1e-5 * b
    fd = (core.d_integral(p, b + h, CFG.quad) - core.d_integral(p, b - h, CFG.quad)) / (2 * h)
    d_rel = abs(core.d_integral_derivative(p, b, CFG.quad) - fd) / abs(fd)
    second = 0.0
    for frac in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
        t = frac * b
        bb = at(t)
        second = max(second, abs(bb.k_prime - t / (tau - 2) * bb.k_double_prime - core.k_h_prime(q, t)))
    return s, ratio, step_tc, step_tcp, d_rel, second


@pytest.fixture(scope="module")
def identity_table():
    t0 = time.perf_counter()
    table = {(q, tau): _identity_errors(q, tau) for q in GRID_Q for tau in GRID_TAU}
    return table, time.perf_counter() - t0


def test_c3_identity_suite(identity_table):
    table, elapsed = identity_table
    ratio = max(v[1] for v in table.values())
    step_tc = max(v[2] for v in table.values())
    step_tcp = max(v[3] for v in table.values())
    d_rel = max(v[4] for v in table.values())
    second = max(v[5] for v in table.values())
    ok = ratio < 1e-9 and step_tc < 1e-9 and step_tcp < 1e-9 and d_rel < 1e-7 and second < 1e-10
    record("3 identity suite on 5x6 grid", ok, elapsed, 30,
           f"ratio {ratio:.1e}, steps {step_tc:.1e}/{step_tcp:.1e}, dD/dt {d_rel:.1e}, K_H' {second:.1e}")


def test_c4_inequality_battery(tmp_path):
    t0 = time.perf_counter()
    reports = verify_grid(GRID_Q, GRID_TAU, CFG)
    worst = math.inf
    for rep in reports:
        s, q, b = rep.summary, rep.q, rep.params.b
        bs = bounds(rep.params)
        lo, hi = gamma_c_envelope(s.t_c, q)
        f0 = core.f0(rep.params, s.t_c, CFG.quad)
        margins = [
            s.t_c_pp, s.t_c_p - s.t_c_pp, s.t_c - s.t_c_p,
            bs.tc_simple - s.t_c, bs.tcp_simple - s.t_c_p, bs.tcpp_simple - s.t_c_pp,
            bs.tc_sharp - s.t_c,
            s.T - b, 1.5 * b - s.T, s.T - s.t_c_p,
            f0 - (1 - q / (math.exp(s.t_c) + q - 1)), 1 - f0,
            s.gamma_c - lo, hi - s.gamma_c,
            core.psi(q, q - 1), -core.psi(q, (q - 1) ** 1.5),
        ]
        worst = min(worst, min(margins))
    out = tmp_path / "report.json"
    codes = {(q, tau): cli_main(["verify", "--q", str(q), "--tau", str(tau), "--out", str(out)])
             for q in GRID_Q for tau in GRID_TAU}
    elapsed = time.perf_counter() - t0
    failing = [(r.q, r.tau) for r in reports if not r.all_passed]
    nonzero = {k: c for k, c in codes.items() if c != 0}
    record("4 inequality battery, verify exit 0 everywhere", worst > MARGIN and not failing and not nonzero,
           elapsed, 60, f"smallest margin {worst:.3e} (floor {MARGIN:g}), failing {failing}, nonzero exits {nonzero}")


# -- criterion 5, split so that each claim reports on its own --------------------------

@pytest.fixture(scope="module")
def large_q():
    t0 = time.perf_counter()
    out = {}
    for q in (1e3, 1e6):
        for tau in (4.0, 6.0):
            p = ModelParams(q, tau)
            s = critical_summary(p, CFG)
            out[(q, tau)] = (s.t_c / p.b, s.t_c_p / p.b, s.t_c_pp / p.b)
    return out, time.perf_counter() - t0


def test_c5a_large_q_tc_ratio(large_q):
    ratios, elapsed = large_q
    devs = {tau: abs(ratios[(1e6, tau)][0] - 2 * (tau - 2) / (tau - 1)) for tau in (4.0, 6.0)}
    record("5a q=1e6: t_c/ln(q-1) within 0.02", max(devs.values()) < 0.02, elapsed, 20,
           ", ".join(f"tau={t:g}: {ratios[(1e6, t)][0]:.5f} (dev {d:.4f})" for t, d in devs.items()))


def test_c5b_large_q_tc_p_ratio(large_q):
    ratios, elapsed = large_q
    devs = {tau: abs(ratios[(1e6, tau)][1] - 1) for tau in (4.0, 6.0)}
    record("5b q=1e6: t_c'/ln(q-1) within 0.05 of 1", max(devs.values()) < 0.05, elapsed, 20,
           ", ".join(f"tau={t:g}: {ratios[(1e6, t)][1]:.5f} (dev {d:.4f})" for t, d in devs.items()))


def test_c5c_large_q_tc_pp_ratio(large_q):
    ratios, elapsed = large_q
    devs = {tau: abs(ratios[(1e6, tau)][2] - 1) for tau in (4.0, 6.0)}
    record("5c q=1e6: t_c''/ln(q-1) within 0.05 of 1", max(devs.values()) < 0.05, elapsed, 20,
           ", ".join(f"tau={t:g}: {ratios[(1e6, t)][2]:.5f} (dev {d:.4f})" for t, d in devs.items()))


def test_c5d_large_q_monotone_approach(large_q):
    ratios, elapsed = large_q
    closer = []
    for tau in (4.0, 6.0):
        limits = (2 * (tau - 2) / (tau - 1), 1.0, 1.0)
        for i in range(3):
            closer.append(abs(ratios[(1e6, tau)][i] - limits[i]) < abs(ratios[(1e3, tau)][i] - limits[i]))
    record("5d ratios closer at q=1e6 than at q=1e3", all(closer), elapsed, 20, f"{sum(closer)}/{len(closer)} closer")


def test_c6_near_two():
    t0 = time.perf_counter()
    ratios = []
    for q in (2.01, 2.001, 2.0001):
        p = ModelParams(q, 7)
        ratios.append(solve_tc_pp(p, CFG) / (2 / 3 * p.b))
    in_band = all(0.85 < r < 1.15 for r in ratios)
    approaching = abs(ratios[0] - 1) > abs(ratios[1] - 1) > abs(ratios[2] - 1)
    b = 0.2
    p4 = ModelParams(1 + math.exp(b), 4)
    tcpp = solve_tc_pp(p4, CFG)
    envelope = b * math.exp(-8 * c_tau(4.0, CFG.quad) * 0.5 / b)
    elapsed = time.perf_counter() - t0
    record("6 q->2: tau=7 ratio to 2b/3, tau=4 envelope", in_band and approaching and 0 < tcpp < envelope,
           elapsed, 30, f"tau=7 ratios {[f'{r:.7f}' for r in ratios]}; tau=4 t_c''={tcpp:.4e} < {envelope:.4e}")


def test_c7_tau_dichotomy():
    t0 = time.perf_counter()
    below = {q: solve_tc_p(ModelParams(q, 4), CFG) / math.log(q - 1) for q in GRID_Q}
    above = solve_tc_p(ModelParams(1e4, 6), CFG) / math.log(1e4 - 1)
    elapsed = time.perf_counter() - t0
    record("7 t_c' vs ln(q-1) dichotomy", all(r < 1 for r in below.values()) and above > 1, elapsed, 5,
           f"tau=4 max ratio {max(below.values()):.4f}; tau=6, q=1e4 ratio {above:.4f}")


def test_c8_cross_characterization():
    t0 = time.perf_counter()
    worst = 0.0
    for q in (3.0, 20.0):
        for tau in (4.0, 5.0, 7.0):
            p = ModelParams(q, tau)
            worst = max(worst, abs(solve_tc_pp(p, CFG, "k2") - solve_tc_pp(p, CFG, "phi")))
    elapsed = time.perf_counter() - t0
    record("8 K'' root vs Phi root", worst < 1e-8, elapsed, 10, f"max |diff| = {worst:.2e}")


def test_c9_residuals(identity_table):
    table, elapsed = identity_table
    stat = max(v[0].residuals["stationarity"] for v in table.values())
    crit = max(v[0].residuals["criticality"] for v in table.values())
    record("9 stationarity and criticality residuals", stat < 1e-8 and crit < 1e-8, elapsed, 30,
           f"max stationarity {stat:.1e}, max criticality {crit:.1e}")

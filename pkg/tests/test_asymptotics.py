from __future__ import annotations

import math
import warnings

import pytest

from pareto_potts.asymptotics import (
    AsymptoticValidityWarning,
    RegimeTag,
    bounds,
    classify_regime,
    conjectured_tc_lower,
    gamma_c_approx,
    gamma_c_envelope,
    limit_ratios,
    moment_sandwich,
    regime_constants,
    small_b_tcpp,
    small_b_tcpp_from_b,
)
from pareto_potts.core import ModelParams
from pareto_potts.quadrature import c_tau
from pareto_potts.solvers import critical_summary, solve_tc_pp


@pytest.mark.parametrize(
    "tau,tag",
    [(4, RegimeTag.TAU_EQ_4), (4.5, RegimeTag.TAU_IN_4_5), (5, RegimeTag.TAU_EQ_5), (7, RegimeTag.TAU_GT_5)],
)
def test_classify(tau, tag):
    assert classify_regime(tau) is tag


def test_classify_rejects():
    with pytest.raises(ValueError):
        classify_regime(3.5)


def test_bounds_values():
    p = ModelParams(20, 6)
    b = math.log(19)
    bs = bounds(p)
    assert bs.tc_simple == 2 * b and bs.tcp_simple == 1.5 * b and bs.tcpp_simple == b
    assert bs.tc_sharp == pytest.approx(1.6 * b)
    assert bs.tc_conjectured_lower == pytest.approx(b)
    assert bs.T_bound_pair == (b, 1.5 * b)


def test_conjectured_lower_edges():
    assert conjectured_tc_lower(ModelParams(3, 4)) is None
    assert conjectured_tc_lower(ModelParams(3, 4.5)) == 0.0


def test_moment_sandwich():
    lo, hi = moment_sandwich(ModelParams(20, 7))
    b = math.log(19)
    assert hi == pytest.approx(2 * 5 / 6 * b)
    assert lo == pytest.approx(2 * (6 / 3) / (6 / 2) * b)
    assert moment_sandwich(ModelParams(20, 5))[0] is None


def test_limit_ratios():
    assert limit_ratios(6) == (1.6, 1.0, 1.0)
    assert limit_ratios(math.inf) == (2.0, 1.0, 1.0)


def test_regime_constants():
    assert regime_constants(4)["K1"] == pytest.approx(8 * c_tau(4.0))
    k2 = regime_constants(4.5)["K2"]
    assert k2 == pytest.approx((8 * 0.5 * c_tau(4.5)) ** (-2))
    assert regime_constants(5) == {"K3": 1.0}
    assert regime_constants(7)["K4"] == pytest.approx(2 / 3)


def test_small_b_values():
    assert small_b_tcpp_from_b(7, 0.001) == pytest.approx(2 / 3 * 0.001)
    assert small_b_tcpp_from_b(5, 0.01) == pytest.approx(0.01 / math.log(100))
    assert small_b_tcpp_from_b(4, 0.2) == pytest.approx(0.2 * math.exp(-8 * c_tau(4.0) / 0.2))


def test_small_b_warns_outside_range():
    with pytest.warns(AsymptoticValidityWarning):
        small_b_tcpp_from_b(7, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert math.isnan(small_b_tcpp_from_b(5, 1.5))
    with pytest.raises(ValueError):
        small_b_tcpp_from_b(7, 0.0)


def test_small_b_tau_gt_5_converges():
    ratios = []
    for q in (2.01, 2.001, 2.0001):
        p = ModelParams(q, 7)
        ratios.append(solve_tc_pp(p) / small_b_tcpp(p))
    assert all(0.85 < r < 1.15 for r in ratios)
    dev = [abs(r - 1) for r in ratios]
    assert dev[0] > dev[1] > dev[2]


def test_small_b_tau_in_4_5_direction():
    # the q -> 2 law for 4 < tau < 5 improves as b shrinks
    devs = []
    for q in (2.1, 2.01, 2.001):
        p = ModelParams(q, 4.5)
        devs.append(abs(math.log(solve_tc_pp(p) / small_b_tcpp(p))))
    assert devs[0] > devs[1] > devs[2]


def test_gamma_envelope_contains_solution():
    for q, tau in [(3, 4), (20, 6), (100, 18)]:
        s = critical_summary(ModelParams(q, tau))
        lo, hi = gamma_c_envelope(s.t_c, q)
        assert lo < s.gamma_c < hi
        g = gamma_c_approx(ModelParams(q, tau), t_c=s.t_c)
        assert g.value == s.t_c and g.width == pytest.approx(hi - lo)


def test_gamma_approx_solves_when_needed():
    g = gamma_c_approx(ModelParams(20, 6))
    assert g.lower < g.upper


@pytest.mark.parametrize("tau", [4.5, 4.8, 6.0, 7.0, 11.0])
def test_small_b_law_within_ten_percent_at_b_1e_4(tau):
    p = ModelParams(1 + math.exp(1e-4), tau)
    assert solve_tc_pp(p) / small_b_tcpp(p) == pytest.approx(1.0, rel=0.10)

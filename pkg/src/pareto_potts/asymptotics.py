"""Closed-form bounds, q -> inf limit ratios and q -> 2 leading-order laws."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .core import ModelParams, pareto_moment
from .quadrature import QuadratureSettings, c_tau


class RegimeTag(str, enum.Enum):
    TAU_EQ_4 = "TAU_EQ_4"
    TAU_IN_4_5 = "TAU_IN_4_5"
    TAU_EQ_5 = "TAU_EQ_5"
    TAU_GT_5 = "TAU_GT_5"


class AsymptoticValidityWarning(UserWarning):
    """Leading-order q -> 2 formulas used at a b = ln(q-1) that is not small."""


# below this b the leading-order laws are reported as trustworthy
TRUSTWORTHY_B = 0.1


@dataclass(frozen=True)
class BoundSet:
    tc_simple: float
    tcp_simple: float
    tcpp_simple: float
    tc_sharp: float
    tc_conjectured_lower: Optional[float]
    T_bound_pair: Tuple[float, float]


def classify_regime(tau: float) -> RegimeTag:
    if not tau >= 4:
        raise ValueError(f"regimes are defined for tau >= 4, got {tau}")
    if tau == 4:
        return RegimeTag.TAU_EQ_4
    if tau < 5:
        return RegimeTag.TAU_IN_4_5
    if tau == 5:
        return RegimeTag.TAU_EQ_5
    return RegimeTag.TAU_GT_5


def conjectured_tc_lower(p: ModelParams) -> Optional[float]:
    """2 (tau-5)/(tau-4) ln(q-1); None at tau = 4, clipped to 0 for 4 < tau <= 5."""
    if p.tau == 4:
        return None
    return max(0.0, 2.0 * (p.tau - 5.0) / (p.tau - 4.0) * p.b)


def bounds(p: ModelParams) -> BoundSet:
    b = p.b
    return BoundSet(
        tc_simple=2.0 * b,
        tcp_simple=1.5 * b,
        tcpp_simple=b,
        tc_sharp=2.0 * (p.tau - 2.0) / (p.tau - 1.0) * b,
        tc_conjectured_lower=conjectured_tc_lower(p),
        T_bound_pair=(b, 1.5 * b),
    )


def moment_sandwich(p: ModelParams) -> Tuple[Optional[float], float]:
    """(2 mu3/mu4 ln(q-1), 2 mu0/mu1 ln(q-1)); the lower member needs tau > 5."""
    upper = 2.0 * pareto_moment(p.tau, 0) / pareto_moment(p.tau, 1) * p.b
    if p.tau <= 5:
        return None, upper
    return 2.0 * pareto_moment(p.tau, 3) / pareto_moment(p.tau, 4) * p.b, upper


def limit_ratios(tau: float) -> Tuple[float, float, float]:
    """q -> inf limits of t_c, t_c', t_c'' divided by ln(q-1)."""
    if not tau >= 4:
        raise ValueError(f"tau must be >= 4, got {tau}")
    if math.isinf(tau):
        return 2.0, 1.0, 1.0
    return 2.0 * (tau - 2.0) / (tau - 1.0), 1.0, 1.0


def regime_constants(tau: float, cfg: Optional[QuadratureSettings] = None) -> Dict[str, float]:
    """The constant of the leading-order law for the regime of ``tau``.

    K1 = 8 C(4); K2 = (8 (tau-4) C(tau))^(-1/(tau-4)); K3 = 1; K4 = (tau-5)/(tau-4).
    """
    regime = classify_regime(tau)
    if regime is RegimeTag.TAU_EQ_4:
        return {"K1": 8.0 * c_tau(4.0, cfg)}
    if regime is RegimeTag.TAU_IN_4_5:
        return {"K2": (8.0 * (tau - 4.0) * c_tau(tau, cfg)) ** (-1.0 / (tau - 4.0))}
    if regime is RegimeTag.TAU_EQ_5:
        return {"K3": 1.0}
    return {"K4": (tau - 5.0) / (tau - 4.0)}


def small_b_tcpp_from_b(tau: float, b: float, cfg: Optional[QuadratureSettings] = None) -> float:
    if not b > 0:
        raise ValueError("b = ln(q-1) must be positive")
    if b >= 1:
        warnings.warn(
            f"b={b:g} is outside the range of the q -> 2 expansion", AsymptoticValidityWarning, stacklevel=3
        )
    regime = classify_regime(tau)
    if regime is RegimeTag.TAU_EQ_4:
        return b * math.exp(-8.0 * c_tau(4.0, cfg) / b)
    if regime is RegimeTag.TAU_IN_4_5:
        return (b / (8.0 * (tau - 4.0) * c_tau(tau, cfg))) ** (1.0 / (tau - 4.0))
    if regime is RegimeTag.TAU_EQ_5:
        # b / ln(1/b); meaningless once b >= 1
        return b / math.log(1.0 / b) if b < 1 else math.nan
    return (tau - 5.0) / (tau - 4.0) * b


def small_b_tcpp(p: ModelParams, cfg: Optional[QuadratureSettings] = None) -> float:
    """Leading-order approximation of t_c'' as q -> 2."""
    return small_b_tcpp_from_b(p.tau, p.b, cfg)


@dataclass(frozen=True)
class GammaApprox:
    value: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def gamma_c_envelope(t_c: float, q: float) -> Tuple[float, float]:
    """Strict envelope t_c < gamma_c < t_c (1 + q/(e^t_c - 1)).

    Both sides follow from gamma_c = t_c/F0(t_c) and 1 - q/(e^t+q-1) < F0(t) < 1.
    """
    return t_c, t_c * (1.0 + q / math.expm1(t_c))


def gamma_c_approx(p: ModelParams, cfg=None, t_c: Optional[float] = None) -> GammaApprox:
    """Large-q approximation gamma_c ~ t_c with the envelope that contains gamma_c."""
    if t_c is None:
        from .solvers import RootSolveConfig, solve_tc

        t_c = solve_tc(p, cfg or RootSolveConfig())
    lo, hi = gamma_c_envelope(t_c, p.q)
    return GammaApprox(t_c, lo, hi)

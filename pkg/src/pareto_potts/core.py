"""Closed-form evaluation of the Potts criticality functions for Pareto weights.

Every Pareto-case function is an elementary expression in one shared integral

    D(t) = int_1^inf w^(1-tau) / (e^(tw) + q - 1) dw,

so a single quadrature per ``t`` yields K, K', K'' and F0 together
(:func:`evaluate`). The homogeneous (tau -> inf) family is fully closed form.

Exponentials are written in terms of ``exp(-t)`` so nothing overflows for
large ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .quadrature import QuadratureResult, QuadratureSettings, integrate, integrate_decaying_tail


class InvalidParameters(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Number of Potts states ``q`` (> 2) and Pareto exponent ``tau`` (>= 4)."""

    q: float
    tau: float

    def __post_init__(self):
        q, tau = self.q, self.tau
        if not (isinstance(q, (int, float)) and math.isfinite(q) and q > 2):
            raise InvalidParameters(f"q must be a finite real > 2, got {q!r}")
        if not (isinstance(tau, (int, float)) and math.isfinite(tau) and tau >= 4):
            raise InvalidParameters(f"tau must be a finite real >= 4, got {tau!r}")
        object.__setattr__(self, "q", float(q))
        object.__setattr__(self, "tau", float(tau))

    @property
    def b(self) -> float:
        """ln(q - 1), the natural scale of every critical point."""
        return math.log(self.q - 1.0)

    @property
    def mean_weight(self) -> float:
        return (self.tau - 1.0) / (self.tau - 2.0)

    def moment(self, n: int) -> float:
        return pareto_moment(self.tau, n)


@dataclass(frozen=True)
class FunctionBundle:
    t: float
    d: float
    k: float
    k_prime: float
    k_double_prime: float
    f0: float


def pareto_moment(tau: float, n: int) -> float:
    """n-th moment of the density (tau-1) w^-tau on [1, inf)."""
    if n < 0:
        raise ValueError("moment order must be non-negative")
    if n >= tau - 1:
        raise ValueError(f"moment {n} diverges for tau={tau} (needs n < tau - 1)")
    return (tau - 1.0) / (tau - 1.0 - n)


# -- elementary pieces -------------------------------------------------------

def _inv_e(q: float, t: float) -> float:
    """1 / (e^t + q - 1)."""
    s = math.exp(-t)
    return s / (1.0 + (q - 1.0) * s)


def _frac_e(q: float, t: float) -> float:
    """e^t / (e^t + q - 1)."""
    return 1.0 / (1.0 + (q - 1.0) * math.exp(-t))


def _log_e_over_q(q: float, t: float) -> float:
    """ln((e^t + q - 1) / q), exact to rounding also for small t."""
    if t < 30.0:
        return math.log1p(math.expm1(t) / q)
    return t - math.log(q) + math.log1p((q - 1.0) * math.exp(-t))


def _t_exp_over_e2(q: float, t: float) -> float:
    """t e^t / (e^t + q - 1)^2."""
    s = math.exp(-t)
    return t * s / (1.0 + (q - 1.0) * s) ** 2


# -- the shared integral -------------------------------------------------------

def _d_tail_bound(p: ModelParams, t: float):
    tau, q = p.tau, p.q

    def bound(a: float) -> float:
        # |f| <= w^(1-tau)/q always; |f| <= w^(1-tau) e^(-tw) for t > 0
        log_pow = math.log(a) * (2.0 - tau) - math.log(q * (tau - 2.0))
        if t > 0:
            log_exp = (1.0 - tau) * math.log(a) - t * a - math.log(t)
            log_pow = min(log_pow, log_exp)
        return math.exp(log_pow) if log_pow > -745 else 0.0

    return bound


def d_integral_result(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None):
    """Full :class:`QuadratureResult` for D(t)."""
    if t < 0:
        raise ValueError(f"D(t) needs t >= 0, got {t}")
    if t == 0:
        # exact: the denominator is the constant q
        return QuadratureResult(1.0 / (p.q * (p.tau - 2.0)), 0.0, 0)
    q, tau = p.q, p.tau

    def f(w):
        s = np.exp(-t * w)
        return w ** (1.0 - tau) * s / (1.0 + (q - 1.0) * s)

    # the integrand falls off over a width ~ 1/(tau + t) above w = 1
    depth = int(math.ceil(math.log2(tau + t))) + 2
    near_one = [1.0 + 2.0**-j for j in range(1, depth)]
    return integrate_decaying_tail(f, 1.0, _d_tail_bound(p, t), cfg, near_one)


def d_integral(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    return d_integral_result(p, t, cfg).value


def d_from_value(p: ModelParams, t: float, d: float) -> float:
    """dD/dt given D(t): (tau-2)/t * D - 1/(t (e^t + q - 1))."""
    if t <= 0:
        raise ValueError("dD/dt is only evaluated for t > 0")
    return (p.tau - 2.0) / t * d - _inv_e(p.q, t) / t


def d_integral_derivative(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    if t <= 0:
        raise ValueError("dD/dt is only evaluated for t > 0")
    return d_from_value(p, t, d_integral(p, t, cfg))


# -- K family from a given D ---------------------------------------------------

def k_from_d(p: ModelParams, t: float, d: float) -> float:
    q, tau = p.q, p.tau
    return (
        (tau - 2.0) / (tau - 1.0) * _log_e_over_q(q, t)
        + (1.0 / (tau - 1.0) - (q + 1.0) / (2.0 * q)) * t
        + (tau - 2.0) * (tau - 3.0) / (2.0 * (tau - 1.0)) * t * (q - 1.0) * d
    )


def k_prime_from_d(p: ModelParams, t: float, d: float) -> float:
    q, tau = p.q, p.tau
    return 0.5 * (q - 1.0) * (1.0 / q - (tau - 2.0) * _inv_e(q, t) + (tau - 2.0) * (tau - 3.0) * d)


def _k2_bracket(p: ModelParams, t: float, d: float) -> float:
    q, tau = p.q, p.tau
    return _t_exp_over_e2(q, t) - (tau - 3.0) * _inv_e(q, t) + (tau - 2.0) * (tau - 3.0) * d


def k_double_prime_from_d(p: ModelParams, t: float, d: float) -> float:
    if t <= 0:
        raise ValueError("K'' has a 1/t prefactor; evaluate at t > 0")
    return (p.q - 1.0) * (p.tau - 2.0) / (2.0 * t) * _k2_bracket(p, t, d)


def k_triple_prime_from_d(p: ModelParams, t: float, d: float) -> float:
    """Third derivative of K; used as the Newton slope when solving K'' = 0."""
    q, tau = p.q, p.tau
    inv = _inv_e(q, t)
    frac = _frac_e(q, t)
    # d/dt [t e^t/E^2] = (1 + t) e^t/E^2 - 2 t e^2t/E^3
    d_first = (1.0 + t) * frac * inv - 2.0 * t * frac * frac * inv
    d_bracket = d_first + (tau - 3.0) * frac * inv + (tau - 2.0) * (tau - 3.0) * d_from_value(p, t, d)
    bracket = _k2_bracket(p, t, d)
    return (q - 1.0) * (tau - 2.0) / 2.0 * (d_bracket / t - bracket / (t * t))


def f0_from_d(p: ModelParams, d: float) -> float:
    return 1.0 - p.q * (p.tau - 2.0) * d


def evaluate(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> FunctionBundle:
    """K, K', K'', F0 at ``t`` from a single D evaluation.

    At t = 0 the K'' entry is its limit value 0.
    """
    d = d_integral(p, t, cfg)
    return FunctionBundle(
        t=t,
        d=d,
        k=k_from_d(p, t, d),
        k_prime=k_prime_from_d(p, t, d),
        k_double_prime=k_double_prime_from_d(p, t, d) if t > 0 else 0.0,
        f0=f0_from_d(p, d),
    )


def k(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    if t < 0:
        raise ValueError("K is defined for t >= 0")
    return k_from_d(p, t, d_integral(p, t, cfg))


def k_prime(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    if t < 0:
        raise ValueError("K' is defined for t >= 0")
    return k_prime_from_d(p, t, d_integral(p, t, cfg))


def k_double_prime(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    if t <= 0:
        raise ValueError("K'' has a 1/t prefactor; evaluate at t > 0")
    return k_double_prime_from_d(p, t, d_integral(p, t, cfg))


def f0(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    """F0(t) = (tau-2) int_1^inf w^(1-tau) (e^(tw)-1)/(e^(tw)+q-1) dw.

    Equal to 1 - q (tau-2) D(t) but free of the cancellation that form
    suffers for small t.
    """
    if t < 0:
        raise ValueError("F0 is defined for t >= 0")
    if t == 0:
        return 0.0
    q, tau = p.q, p.tau

    def f(w):
        s = np.exp(-t * w)
        return w ** (1.0 - tau) * -np.expm1(-t * w) / (1.0 + (q - 1.0) * s)

    def bound(a: float) -> float:
        return a ** (2.0 - tau) / (tau - 2.0)

    depth = int(math.ceil(math.log2(tau + t))) + 2
    near_one = [1.0 + 2.0**-j for j in range(1, depth)]
    # the integrand is O(t) for small t; scale the absolute floor with it
    cfg = cfg or QuadratureSettings()
    cfg = replace(cfg, abs_tol=cfg.abs_tol * min(1.0, t))
    return (tau - 2.0) * integrate_decaying_tail(f, 1.0, bound, cfg, near_one).value


def _log_term_over_q(p: ModelParams, t: float, d: float) -> float:
    """E[ln((e^(tW) + q - 1)/q)] given D(t), by partial integration."""
    return _log_e_over_q(p.q, t) + t / (p.tau - 2.0) - (p.q - 1.0) * t * d


def expected_log_term(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    """E[ln(e^(tW) + q - 1)] via partial integration onto D."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return math.log(p.q) + _log_term_over_q(p, t, d_integral(p, t, cfg))


def criticality_residual(p: ModelParams, t: float, gamma: float, cfg: Optional[QuadratureSettings] = None) -> float:
    """Left side of the criticality condition; zero at (t_c, gamma_c)."""
    if t < 0 or not gamma > 0:
        raise ValueError("need t >= 0 and gamma > 0")
    q = p.q
    log_term = _log_term_over_q(p, t, d_integral(p, t, cfg))
    return log_term / p.mean_weight - (q - 1.0) / (2.0 * q) * t * (t / gamma) - t / q


# -- Phi characterization of t_c'' ---------------------------------------------

def a_kernel(q: float, x):
    """((q-1) e^x - e^2x) / (e^x + q - 1)^3; accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    s = np.exp(-x)
    # (q-1) e^-x - 1 = expm1(ln(q-1) - x) keeps full accuracy through the zero at x = ln(q-1)
    out = s * np.expm1(math.log(q - 1.0) - x) / (1.0 + (q - 1.0) * s) ** 3
    return float(out) if np.ndim(out) == 0 else out


def phi(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    """Phi(t) = int_t^inf x^(3-tau) a(x) dx.

    The part below ln(q-1) is integrated in log x, which keeps it accurate for
    the exponentially small arguments met when q is close to 2.
    """
    if not t > 0:
        raise ValueError("Phi is evaluated for t > 0 only")
    q, tau = p.q, p.tau
    b = p.b

    def tail_f(x):
        return x ** (3.0 - tau) * a_kernel(q, x)

    def tail_bound(a):
        # |a(x)| <= e^-x beyond ln(q-1); x^(3-tau) is non-increasing
        lg = (3.0 - tau) * math.log(a) - a
        return math.exp(lg) if lg > -745 else 0.0

    start = max(t, b)
    # Phi can be far below O(1) (large q, or tau > 4 with tiny t); the
    # absolute floor follows the integrand instead
    tail_scale = abs(tail_f(start + 1.0))
    total = integrate_decaying_tail(tail_f, start, tail_bound, cfg, abs_scale=tail_scale).value
    if t < b:
        def log_f(s):
            x = np.exp(s)
            return np.exp((4.0 - tau) * s) * a_kernel(q, x)

        lo, hi = math.log(t), math.log(b)
        n = max(1, int(math.ceil(hi - lo)))
        bps = [lo + (hi - lo) * i / n for i in range(1, n)]
        log_scale = float(np.max(np.abs(log_f(np.linspace(lo, hi, n + 1)))))
        total += integrate(log_f, lo, hi, cfg, bps, abs_scale=log_scale).value
    return total


def phi_derivative(p: ModelParams, t: float) -> float:
    return -(t ** (3.0 - p.tau)) * a_kernel(p.q, t)


def k_double_prime_via_phi(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    """K''(t) = -(q-1)(tau-2)/2 * t^(tau-3) * Phi(t).

    Two integrations by parts of D turn the bracket of K'' into
    -t^(tau-2) Phi(t); this form has no cancellation at small t.
    """
    return -0.5 * (p.q - 1.0) * (p.tau - 2.0) * t ** (p.tau - 3.0) * phi(p, t, cfg)


def _moment_a(p: ModelParams, t: float, weight, cfg: Optional[QuadratureSettings]) -> float:
    return integrate(lambda x: weight(x) * a_kernel(p.q, x), 0.0, t, cfg).value


def k_prime_via_phi(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    """K'(t) = -(q-1)/2 * [int_0^t x a(x) dx + t^(tau-2) Phi(t)].

    Follows from K'(0) = 0 and the Phi form of K'' after swapping the order
    of integration; accurate where the D form loses everything to rounding.
    """
    if not t > 0:
        return 0.0
    tau = p.tau
    head = _moment_a(p, t, lambda x: x, cfg)
    return -0.5 * (p.q - 1.0) * (head + t ** (tau - 2.0) * phi(p, t, cfg))


def k_via_phi(p: ModelParams, t: float, cfg: Optional[QuadratureSettings] = None) -> float:
    """K(t) = -(q-1)(tau-2)/2 * [int_0^t (t x/(tau-2) - x^2/(tau-1)) a(x) dx
    + t^(tau-1) Phi(t) / ((tau-1)(tau-2))]."""
    if not t > 0:
        return 0.0
    tau = p.tau
    head = _moment_a(p, t, lambda x: t * x / (tau - 2.0) - x * x / (tau - 1.0), cfg)
    tail = t ** (tau - 1.0) / ((tau - 1.0) * (tau - 2.0)) * phi(p, t, cfg)
    return -0.5 * (p.q - 1.0) * (tau - 2.0) * (head + tail)


# -- psi and varphi ------------------------------------------------------------

def _xlogx_cubic(u: float) -> float:
    """(1+u) ln(1+u) - u - u^2/2, which is O(u^3), without cancellation."""
    if abs(u) < 0.1:
        # sum_{n>=3} (-1)^n u^n / (n (n-1)); 20 terms reach double precision
        return sum((-1) ** n * u**n / (n * (n - 1)) for n in range(22, 2, -1))
    return (1.0 + u) * math.log1p(u) - u - 0.5 * u * u


def _psi_u(q: float, u: float) -> float:
    # the u^2 coefficient 1/2 - 1/q is formed exactly as (q-2)/(2q); it vanishes as q -> 2
    return (q - 2.0) / (2.0 * q) * u * u + _xlogx_cubic(u)


def psi(q: float, y: float) -> float:
    """y (1 + ln y) + q - 1 - (y + q - 1)^2 / q, for y >= 1."""
    if y < 1:
        raise ValueError("psi is defined for y >= 1")
    # expanding around y = 1 the constant and linear terms cancel exactly
    return _psi_u(q, y - 1.0)


def t_equation(q: float, t: float) -> float:
    """t e^t/E^2 + 1/E - 1/q with E = e^t + q - 1; T is its positive root.

    Evaluated as psi(e^t)/E^2 so that small t (q near 2) keeps full accuracy.
    """
    inv = _inv_e(q, t)
    return _psi_u(q, math.expm1(t)) * inv * inv


def t_equation_derivative(q: float, t: float) -> float:
    return t * a_kernel(q, t)


def varphi(y: float) -> float:
    """y^2 (1+y)^2 - (1+y)(1+y^2) - 3 y (1+y^2) ln y."""
    return y * y * (1.0 + y) ** 2 - (1.0 + y) * (1.0 + y * y) - 3.0 * y * (1.0 + y * y) * math.log(y)


def xi(v: float) -> float:
    """1 + v - v^3 - v^4 + 3 v ln v + 3 v^3 ln v (equals -varphi(v))."""
    lv = math.log(v)
    return 1.0 + v - v**3 - v**4 + 3.0 * v * lv + 3.0 * v**3 * lv


# -- homogeneous (tau -> inf) family ---------------------------------------------

def f0_h(q: float, t: float) -> float:
    return -math.expm1(-t) * _frac_e(q, t)


def k_h(q: float, t: float) -> float:
    return _log_e_over_q(q, t) - (q + 1.0) / (2.0 * q) * t + 0.5 * (q - 1.0) * t * _inv_e(q, t)


def k_h_prime(q: float, t: float) -> float:
    return 0.5 * (q - 1.0) * (1.0 / q - _inv_e(q, t) - _t_exp_over_e2(q, t))


def k_h_double_prime(q: float, t: float) -> float:
    return -0.5 * (q - 1.0) * t * a_kernel(q, t)


def k_h_triple_prime(q: float, t: float) -> float:
    # d/dx a(x) = e^x ((q-1)^2 - 4(q-1) e^x + e^2x) / (e^x + q - 1)^4
    s = math.exp(-t)
    qm = q - 1.0
    da = s * (qm * qm * s * s - 4.0 * qm * s + 1.0) / (1.0 + qm * s) ** 4
    return -0.5 * qm * (a_kernel(q, t) + t * da)

"""Root finding for the critical points t_c'', t_c', t_c and T.

Every solve is a safeguarded Newton iteration on a certified sign-change
bracket built from closed-form bounds: t_c'' in (0, ln(q-1)), t_c' in
(t_c'', T) with ln(q-1) < T < 1.5 ln(q-1), and t_c in
(t_c', 2 (tau-2)/(tau-1) ln(q-1)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

from . import core
from .core import ModelParams
from .quadrature import QuadratureSettings


class SolverError(RuntimeError):
    def __init__(self, message: str, stage: str = ""):
        super().__init__(f"[{stage}] {message}" if stage else message)
        self.stage = stage


class BracketError(SolverError):
    pass


@dataclass(frozen=True)
class RootSolveConfig:
    tol_t: float = 1e-9
    max_iters: int = 200
    quad: QuadratureSettings = field(default_factory=QuadratureSettings)

    def __post_init__(self):
        if not self.tol_t > 0:
            raise ValueError("tol_t must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol_t < 10 * self.quad.rel_tol:
            warnings.warn(
                f"tol_t={self.tol_t:g} is below 10x the quadrature tolerance "
                f"({self.quad.rel_tol:g}); roots may chase quadrature noise",
                stacklevel=3,
            )


@dataclass
class CriticalSummary:
    q: float
    tau: float
    t_c_pp: float
    t_c_p: float
    t_c: float
    T: float
    gamma_c: float
    beta_c: float
    residuals: Dict[str, float]
    tcpp_method: str = "k_double_prime"
    reduced_confidence: bool = False


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def newton_bisect(
    f: Callable[[float], float],
    df: Callable[[float], float],
    bracket: Tuple[float, float],
    cfg: Optional[RootSolveConfig] = None,
    *,
    x0: Optional[float] = None,
    tol: Optional[float] = None,
    iterates: Optional[List[float]] = None,
) -> float:
    """Newton's method kept inside a sign-change bracket.

    A Newton step is taken only if it lands strictly inside the current
    bracket; otherwise the bracket is bisected. Each evaluated point replaces
    the bracket end with the same sign, so the bracket never grows.
    Converges when a step or the bracket width drops below ``tol``
    (default ``cfg.tol_t``).
    """
    cfg = cfg or RootSolveConfig()
    tol = cfg.tol_t if tol is None else tol
    lo, hi = bracket
    if not lo < hi:
        raise BracketError(f"empty bracket ({lo}, {hi})")
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if _sign(flo) == _sign(fhi) or not (math.isfinite(flo) and math.isfinite(fhi)):
        raise BracketError(f"no sign change on ({lo}, {hi}): f = {flo:.3e}, {fhi:.3e}")

    x = 0.5 * (lo + hi) if x0 is None else min(max(x0, lo), hi)
    for _ in range(cfg.max_iters):
        fx = f(x)
        if iterates is not None:
            iterates.append(x)
        if fx == 0:
            return x
        if _sign(fx) == _sign(flo):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        slope = df(x)
        step_ok = slope != 0 and math.isfinite(slope)
        x_new = x - fx / slope if step_ok else math.nan
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol or hi - lo <= tol:
            return x_new
        x = x_new
    raise SolverError(f"no convergence after {cfg.max_iters} iterations, bracket ({lo}, {hi})")


# -- T -----------------------------------------------------------------------

def t_tolerance(q: float, cfg: RootSolveConfig) -> float:
    """Absolute tolerance of the T solve."""
    return min(cfg.tol_t, 1e-12 * math.log(q - 1.0))


def solve_T(q: float, cfg: Optional[RootSolveConfig] = None) -> float:
    """Positive root of t e^t/(e^t+q-1)^2 + 1/(e^t+q-1) - 1/q (independent of tau)."""
    if not q > 2:
        raise core.InvalidParameters(f"q must be > 2, got {q}")
    cfg = cfg or RootSolveConfig()
    b = math.log(q - 1.0)
    # T feeds exact identities, so it is resolved to near machine precision
    return newton_bisect(
        lambda t: core.t_equation(q, t),
        lambda t: core.t_equation_derivative(q, t),
        (b, 1.5 * b),
        cfg,
        tol=t_tolerance(q, cfg),
    )


# -- t_c'' -----------------------------------------------------------------------

@dataclass(frozen=True)
class TcppSolution:
    root: float
    method: str
    reduced_confidence: bool


def _tcpp_via_k2(p: ModelParams, cfg: RootSolveConfig, seed: Optional[float] = None):
    """Root of K'' from its D representation; returns (root, conditioning)."""
    q, tau, b = p.q, p.tau, p.b
    quad = cfg.quad
    scale = (q - 1.0) * (tau - 2.0) / 2.0

    @lru_cache(maxsize=None)
    def at(t):
        res = core.d_integral_result(p, t, quad)
        d = res.value
        noise = scale / t * (tau - 2.0) * (tau - 3.0) * res.error_estimate
        return core.k_double_prime_from_d(p, t, d), core.k_triple_prime_from_d(p, t, d), noise

    if at(b)[0] <= at(b)[2]:
        raise BracketError("K''(ln(q-1)) is not certifiably positive", "t_c_pp")
    t = 0.9 * b if seed is None else min(0.9 * b, seed)
    for _ in range(60):
        if at(t)[0] < -at(t)[2]:
            break
        t *= 0.5
    else:
        raise BracketError("no certified negative value of K'' below ln(q-1)", "t_c_pp")
    root = newton_bisect(lambda s: at(s)[0], lambda s: at(s)[1], (t, b), cfg)
    _, k3, noise = at(root)
    cond = noise / abs(k3) if k3 else math.inf
    return root, cond


def _tcpp_via_phi(p: ModelParams, cfg: RootSolveConfig, guess: Optional[float] = None) -> float:
    """Root of Phi, solved in log t so tiny roots keep full relative accuracy."""
    b = p.b
    quad = cfg.quad

    @lru_cache(maxsize=None)
    def g(s):
        return core.phi(p, math.exp(s), quad)

    def dg(s):
        t = math.exp(s)
        return t * core.phi_derivative(p, t)

    hi = math.log(b)
    if not g(hi) < 0:
        raise BracketError("Phi(ln(q-1)) is not negative", "t_c_pp")
    t_lo = 0.5 * b if guess is None else min(0.5 * b, guess)
    while not g(math.log(t_lo)) > 0:
        t_lo *= 1e-2
        if t_lo < 1e-300:
            raise SolverError("t_c'' lies below the double-precision range", "t_c_pp")
    lo = math.log(t_lo)
    tol_s = min(1e-10, cfg.tol_t / b)
    return math.exp(newton_bisect(g, dg, (lo, hi), cfg, tol=tol_s))


def solve_tc_pp_detailed(p: ModelParams, cfg: Optional[RootSolveConfig] = None, method: str = "auto") -> TcppSolution:
    try:
        return _solve_tc_pp(p, cfg or RootSolveConfig(), method)
    except SolverError as exc:
        if exc.stage:
            raise
        raise type(exc)(str(exc), "t_c_pp") from exc


def _solve_tc_pp(p: ModelParams, cfg: RootSolveConfig, method: str) -> TcppSolution:
    """t_c'' with the route used.

    ``method``: "k2" solves K'' = 0 from D only, "phi" solves Phi = 0 only,
    "auto" uses K'' and falls back to Phi when K'' cannot resolve the root to
    ``tol_t`` (its bracket collapses into quadrature noise for tiny roots).
    """
    from .asymptotics import small_b_tcpp  # deferred: asymptotics imports this module

    b = p.b
    reduced = p.tau == 4.0 and b < 0.05
    seed = None
    if b < 0.1:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            approx = small_b_tcpp(p, cfg.quad)
        if approx > 0:
            seed = 0.1 * approx
        elif p.tau == 4.0:
            raise SolverError("t_c'' underflows double precision at this q", "t_c_pp")

    if method == "phi":
        return TcppSolution(_tcpp_via_phi(p, cfg, seed), "phi", reduced)
    if method not in ("k2", "auto"):
        raise ValueError(f"unknown method {method!r}")
    try:
        root, cond = _tcpp_via_k2(p, cfg, seed)
    except BracketError:
        if method == "k2":
            raise
        return TcppSolution(_tcpp_via_phi(p, cfg, seed), "phi", reduced)
    if method == "auto" and cond > cfg.tol_t:
        return TcppSolution(_tcpp_via_phi(p, cfg, 0.5 * root), "phi", reduced)
    return TcppSolution(root, "k_double_prime", reduced)


def solve_tc_pp(p: ModelParams, cfg: Optional[RootSolveConfig] = None, method: str = "auto") -> float:
    return solve_tc_pp_detailed(p, cfg, method).root


# -- t_c' and t_c ------------------------------------------------------------------

def _bundle_cache(p: ModelParams, cfg: RootSolveConfig):
    @lru_cache(maxsize=None)
    def at(t):
        return core.evaluate(p, t, cfg.quad)

    return at


def _phi_family(p: ModelParams, cfg: RootSolveConfig):
    """(K, K', K'') from Phi, sharing one Phi evaluation per point."""
    tau = p.tau
    c = 0.5 * (p.q - 1.0)

    @lru_cache(maxsize=None)
    def at(t):
        ph = core.phi(p, t, cfg.quad)
        h1 = core.integrate(lambda x: x * core.a_kernel(p.q, x), 0.0, t, cfg.quad).value
        h2 = core.integrate(lambda x: x * x * core.a_kernel(p.q, x), 0.0, t, cfg.quad).value
        k = -c * (t * h1 - (tau - 2.0) / (tau - 1.0) * h2 + t ** (tau - 1.0) / (tau - 1.0) * ph)
        k1 = -c * (h1 + t ** (tau - 2.0) * ph)
        k2 = -c * (tau - 2.0) * t ** (tau - 3.0) * ph
        return k, k1, k2

    return at


def _family(p: ModelParams, cfg: RootSolveConfig, route: str):
    """Callable t -> (K, K', K'') along ``route`` ("d" or "phi")."""
    if route == "phi":
        return _phi_family(p, cfg)
    if route != "d":
        raise ValueError(f"unknown route {route!r}")
    at = _bundle_cache(p, cfg)
    return lambda t: (at(t).k, at(t).k_prime, at(t).k_double_prime)


def _solve_on_route(p, cfg, f, df, bracket, route, x0, iterates=None):
    """Newton-bisection in t, or in log t on the Phi route where roots can be tiny."""
    if route != "phi":
        return newton_bisect(f, df, bracket, cfg, x0=x0, iterates=iterates)
    log_iter = [] if iterates is not None else None
    s = newton_bisect(
        lambda u: f(math.exp(u)),
        lambda u: math.exp(u) * df(math.exp(u)),
        (math.log(bracket[0]), math.log(bracket[1])),
        cfg,
        x0=math.log(x0),
        tol=min(1e-10, cfg.tol_t / p.b),
        iterates=log_iter,
    )
    if iterates is not None:
        iterates.extend(math.exp(u) for u in log_iter)
    return math.exp(s)


def solve_tc_p(
    p: ModelParams,
    cfg: Optional[RootSolveConfig] = None,
    tc_pp: Optional[float] = None,
    T: Optional[float] = None,
    route: str = "d",
) -> float:
    """Zero of K' on (t_c'', T), started from T.

    K' is not convex on that range in general, so every Newton step is
    bracket-guarded. ``route="phi"`` evaluates K' through Phi, which stays
    accurate when q is close to 2.
    """
    cfg = cfg or RootSolveConfig()
    tc_pp = solve_tc_pp(p, cfg) if tc_pp is None else tc_pp
    T = solve_T(p.q, cfg) if T is None else T
    at = _family(p, cfg, route)
    try:
        return _solve_on_route(p, cfg, lambda t: at(t)[1], lambda t: at(t)[2], (tc_pp, T), route, T)
    except SolverError as exc:
        raise type(exc)(str(exc), "t_c_p") from exc


def tc_upper_bound(p: ModelParams) -> float:
    return 2.0 * (p.tau - 2.0) / (p.tau - 1.0) * p.b


def solve_tc(
    p: ModelParams,
    cfg: Optional[RootSolveConfig] = None,
    tc_p: Optional[float] = None,
    iterates: Optional[List[float]] = None,
    route: str = "d",
) -> float:
    """Zero of K on (t_c', 2 (tau-2)/(tau-1) ln(q-1)).

    Newton starts at the upper end; K is convex there, so the iterates
    decrease monotonically onto t_c.
    """
    cfg = cfg or RootSolveConfig()
    tc_p = solve_tc_p(p, cfg, route=route) if tc_p is None else tc_p
    at = _family(p, cfg, route)
    upper = tc_upper_bound(p)
    try:
        return _solve_on_route(
            p, cfg, lambda t: at(t)[0], lambda t: at(t)[1], (tc_p, upper), route, upper, iterates
        )
    except SolverError as exc:
        raise type(exc)(str(exc), "t_c") from exc


def critical_summary(p: ModelParams, cfg: Optional[RootSolveConfig] = None) -> CriticalSummary:
    """Solve t_c'' -> T -> t_c' -> t_c and derive gamma_c, beta_c and residuals."""
    cfg = cfg or RootSolveConfig()
    pp = solve_tc_pp_detailed(p, cfg)
    try:
        T = solve_T(p.q, cfg)
    except SolverError as exc:
        raise type(exc)(str(exc), "T") from exc
    # once t_c'' needed Phi, K and K' from D are rounding-limited as well
    route = "phi" if pp.method == "phi" else "d"
    tc_p = solve_tc_p(p, cfg, pp.root, T, route=route)
    tc = solve_tc(p, cfg, tc_p, route=route)

    if not 0 < pp.root < tc_p < tc:
        raise SolverError(f"ordering violated: {pp.root}, {tc_p}, {tc}", "ordering")

    fam = _family(p, cfg, route)
    f0 = core.f0(p, tc, cfg.quad)
    gamma_c = tc / f0
    residuals = {
        "k(t_c)": abs(fam(tc)[0]),
        "k_prime(t_c_p)": abs(fam(tc_p)[1]),
        "k_double_prime(t_c_pp)": abs(fam(pp.root)[2]),
        "criticality": abs(core.criticality_residual(p, tc, gamma_c, cfg.quad)),
        "stationarity": abs(f0 - tc / gamma_c),
    }
    return CriticalSummary(
        q=p.q,
        tau=p.tau,
        t_c_pp=pp.root,
        t_c_p=tc_p,
        t_c=tc,
        T=T,
        gamma_c=gamma_c,
        beta_c=math.log1p(gamma_c),
        residuals=residuals,
        tcpp_method=pp.method,
        reduced_confidence=pp.reduced_confidence,
    )


# -- homogeneous family ---------------------------------------------------------------

def solve_homogeneous(q: float, cfg: Optional[RootSolveConfig] = None) -> Tuple[float, float, float]:
    """Roots of K_H'', K_H', K_H found numerically on the same brackets as the Pareto case.

    Exact answers are ln(q-1), T and 2 ln(q-1).
    """
    cfg = cfg or RootSolveConfig()
    b = math.log(q - 1.0)
    tpp = newton_bisect(
        lambda t: core.k_h_double_prime(q, t), lambda t: core.k_h_triple_prime(q, t), (0.5 * b, 1.5 * b), cfg
    )
    tp = newton_bisect(
        lambda t: core.k_h_prime(q, t), lambda t: core.k_h_double_prime(q, t), (tpp, 1.75 * b), cfg
    )
    tc = newton_bisect(lambda t: core.k_h(q, t), lambda t: core.k_h_prime(q, t), (tp, 3.0 * b), cfg)
    return tpp, tp, tc

"""Pass/fail battery of bounds, identities and sign criteria at one (q, tau).

Every check is a record with a stable name, so two reports can be diffed
line by line. Strict inequalities must hold with margin above a floor tied
to the solver tolerance; identities are compared at fixed tolerances.
Conjecture and informational records never affect ``all_passed``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from . import core
from .asymptotics import bounds, conjectured_tc_lower, gamma_c_envelope, moment_sandwich
from .core import InvalidParameters, ModelParams
from .quadrature import QuadratureError
from .solvers import (
    CriticalSummary,
    RootSolveConfig,
    SolverError,
    _family,
    critical_summary,
    solve_tc_pp_detailed,
    t_tolerance,
)

MANDATORY, CONJECTURE, INFO = "mandatory", "conjecture", "info"

IDENTITY_REL_TOL = 1e-9
D_DERIVATIVE_REL_TOL = 1e-7
HOMOGENEOUS_ABS_TOL = 1e-10
RESIDUAL_TOL = 1e-8
ROOT_AGREEMENT_TOL = 1e-8
SIGN_SAMPLES = 1000

# names of every check in emission order; a failed solve marks the rest skipped
CHECK_NAMES = (
    "ordering.tc_pp<tc_p",
    "ordering.tc_p<tc",
    "sign_pattern.K",
    "sign_pattern.K1",
    "sign_pattern.K2",
    "bound.tc<2b",
    "bound.tc_p<1.5b",
    "bound.tc_pp<b",
    "bound.tc<sharp",
    "sign.K(2b)>0",
    "sign.K1(1.5b)>0",
    "sign.K2(b)>0",
    "sign.K2(T)>0",
    "bound.b<T",
    "bound.T<1.5b",
    "bound.tc_p<T",
    "identity.K(2b)=2b/(tau-1)*K1(2b)",
    "identity.newton_step_tc",
    "identity.newton_step_tc_p",
    "identity.dD/dt",
    "bound.F0(tc)>1-q/E",
    "bound.F0(tc)<1",
    "bound.F0(tc_p)>1-q/E",
    "bound.F0(tc_pp)>1-q/E",
    "bound.gamma_c>tc",
    "bound.gamma_c<envelope",
    "residual.stationarity",
    "residual.criticality",
    "psi(q-1)>0",
    "psi((q-1)^1.5)<0",
    "psi.Y>q/2",
    "psi.lnY=T",
    "varphi>0",
    "xi=-varphi",
    "identity.phi_root=K2_root",
    "identity.homogeneous_first",
    "identity.homogeneous_second",
    "conjecture.tc>2(tau-5)/(tau-4)b",
    "conjecture.tc>2mu3/mu4*b",
    "info.newton_step_vs_tc_p",
)


@dataclass
class Check:
    name: str
    kind: str  # inequality | identity | sign_pattern | residual
    passed: bool
    lhs: float
    rhs: float
    margin: float
    severity: str = MANDATORY
    note: str = ""

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "passed": self.passed,
            "lhs": _json_num(self.lhs),
            "rhs": _json_num(self.rhs),
            "margin": _json_num(self.margin),
            "severity": self.severity,
            "note": self.note,
        }


@dataclass
class VerificationReport:
    q: float
    tau: float
    params: Optional[ModelParams]
    checks: List[Check] = field(default_factory=list)
    status: str = "ok"  # ok | invalid_params | solver_failure
    failed_stage: str = ""
    summary: Optional[CriticalSummary] = None

    @property
    def all_passed(self) -> bool:
        """Conjunction over the mandatory checks; false for invalid or failed points."""
        if self.status != "ok":
            return False
        return all(c.passed for c in self.checks if c.severity == MANDATORY)

    @property
    def strict_passed(self) -> bool:
        """As ``all_passed`` but conjecture checks count as well."""
        return self.all_passed and all(c.passed for c in self.checks if c.severity == CONJECTURE)

    def failures(self, strict: bool = False) -> List[Check]:
        fatal = (MANDATORY, CONJECTURE) if strict else (MANDATORY,)
        return [c for c in self.checks if c.severity in fatal and not c.passed]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> Dict:
        return {
            "params": {"q": _json_num(self.q), "tau": _json_num(self.tau)},
            "checks": [c.to_dict() for c in self.checks],
            "all_passed": self.all_passed,
            "status": self.status,
            "failed_stage": self.failed_stage,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _json_num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


class _Recorder:
    def __init__(self, floor_abs: float, floor_rel: float):
        self.checks: List[Check] = []
        self.floor_abs = floor_abs
        self.floor_rel = floor_rel

    def floor(self, scale: float) -> float:
        # roots found in log t carry a relative, not absolute, tolerance
        return max(min(self.floor_abs, self.floor_rel * abs(scale)), 0.0) if self.floor_rel else self.floor_abs

    def less(self, name, lhs, rhs, severity=MANDATORY, note="", floor=None):
        margin = rhs - lhs
        fl = self.floor(max(abs(lhs), abs(rhs))) if floor is None else floor
        self.checks.append(Check(name, "inequality", bool(margin > fl), lhs, rhs, margin, severity, note))

    def identity(self, name, lhs, rhs, tol, relative=True, note=""):
        diff = abs(lhs - rhs)
        scale = max(abs(lhs), abs(rhs)) if relative else 1.0
        err = diff / scale if scale > 0 else diff
        self.checks.append(Check(name, "identity", bool(err <= tol), lhs, rhs, tol - err, MANDATORY, note))

    def residual(self, name, value, tol):
        self.checks.append(Check(name, "residual", bool(abs(value) < tol), abs(value), tol, tol - abs(value)))

    def pattern(self, name, changes, note=""):
        self.checks.append(Check(name, "sign_pattern", changes == 1, float(changes), 1.0, 1.0 - abs(changes - 1), MANDATORY, note))

    def info(self, name, lhs, rhs, note):
        self.checks.append(Check(name, "inequality", True, lhs, rhs, rhs - lhs, INFO, note))


def _sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _sign_samples(b: float, root: float) -> np.ndarray:
    ts = 3.0 * b * np.arange(1, SIGN_SAMPLES + 1) / SIGN_SAMPLES
    if root < ts[0]:
        # the root sits below the grid spacing; one extra point brackets it
        ts = np.concatenate([[0.5 * root], ts])
    return ts


def _find_Y(q: float) -> float:
    return bisect(lambda y: core.psi(q, y), q - 1.0, (q - 1.0) ** 1.5, xtol=1e-14 * q, rtol=4 * np.finfo(float).eps)


def verify(p: ModelParams, cfg: Optional[RootSolveConfig] = None) -> VerificationReport:
    cfg = cfg or RootSolveConfig()
    report = VerificationReport(p.q, p.tau, p)
    try:
        s = critical_summary(p, cfg)
        report.summary = s
        _run_checks(p, cfg, s, report)
    except (SolverError, QuadratureError) as exc:
        report.status = "solver_failure"
        report.failed_stage = getattr(exc, "stage", "") or "quadrature"
        done = {c.name for c in report.checks}
        report.checks += [
            Check(name, "inequality", False, math.nan, math.nan, math.nan, _severity(name), f"skipped: {exc}")
            for name in CHECK_NAMES
            if name not in done
        ]
    return report


def _severity(name: str) -> str:
    if name.startswith("conjecture."):
        return CONJECTURE
    if name.startswith("info."):
        return INFO
    return MANDATORY


def _run_checks(p: ModelParams, cfg: RootSolveConfig, s: CriticalSummary, report: VerificationReport) -> None:
    q, tau, b = p.q, p.tau, p.b
    quad = cfg.quad
    route = "phi" if s.tcpp_method == "phi" else "d"
    floor_rel = 10.0 * min(1e-10, cfg.tol_t / b) if route == "phi" else 0.0
    r = _Recorder(10.0 * cfg.tol_t, floor_rel)
    report.checks = r.checks  # shared, so a mid-run failure keeps what was done
    fam = _family(p, cfg, route)
    value_floor = 10.0 * quad.rel_tol  # for signs of function values
    bs = bounds(p)

    r.less("ordering.tc_pp<tc_p", s.t_c_pp, s.t_c_p)
    r.less("ordering.tc_p<tc", s.t_c_p, s.t_c)

    ts = _sign_samples(b, s.t_c_pp)
    vals = np.array([fam(float(t)) for t in ts])
    note = f"{ts.size} samples on (0, 3 ln(q-1)]"
    for col, name in enumerate(("sign_pattern.K", "sign_pattern.K1", "sign_pattern.K2")):
        column = vals[:, col]
        changes = _sign_changes(column)
        neg_first = column[column != 0][0] < 0 if np.any(column != 0) else False
        r.pattern(name, changes if neg_first else -1, note + ("" if neg_first else "; not negative first"))

    r.less("bound.tc<2b", s.t_c, bs.tc_simple)
    r.less("bound.tc_p<1.5b", s.t_c_p, bs.tcp_simple)
    r.less("bound.tc_pp<b", s.t_c_pp, bs.tcpp_simple)
    r.less("bound.tc<sharp", s.t_c, bs.tc_sharp)

    k2b, k1_2b, _ = fam(2.0 * b)
    r.less("sign.K(2b)>0", 0.0, k2b, floor=value_floor * abs(k1_2b) * b)
    r.less("sign.K1(1.5b)>0", 0.0, fam(1.5 * b)[1], floor=value_floor * abs(k1_2b))
    r.less("sign.K2(b)>0", 0.0, fam(b)[2], floor=value_floor * abs(fam(b)[2]))
    _, k1T, k2T = fam(s.T)
    r.less("sign.K2(T)>0", 0.0, k2T, floor=value_floor * abs(k2T))

    t_floor = 10.0 * t_tolerance(q, cfg)
    r.less("bound.b<T", b, s.T, floor=t_floor)
    r.less("bound.T<1.5b", s.T, 1.5 * b, floor=t_floor)
    r.less("bound.tc_p<T", s.t_c_p, s.T)

    r.identity("identity.K(2b)=2b/(tau-1)*K1(2b)", k2b, 2.0 * b / (tau - 1.0) * k1_2b, IDENTITY_REL_TOL)
    r.identity("identity.newton_step_tc", 2.0 * b - k2b / k1_2b, bs.tc_sharp, IDENTITY_REL_TOL)
    r.identity("identity.newton_step_tc_p", s.T - k1T / k2T, (tau - 3.0) / (tau - 2.0) * s.T, IDENTITY_REL_TOL)

    t_fd = b
    h = 1e-5 * t_fd
    fd = (core.d_integral(p, t_fd + h, quad) - core.d_integral(p, t_fd - h, quad)) / (2.0 * h)
    r.identity("identity.dD/dt", core.d_integral_derivative(p, t_fd, quad), fd, D_DERIVATIVE_REL_TOL,
               note="central difference, h = 1e-5 ln(q-1)")

    f0 = {t: core.f0(p, t, quad) for t in (s.t_c, s.t_c_p, s.t_c_pp)}
    for t, name in ((s.t_c, "tc"), (s.t_c_p, "tc_p"), (s.t_c_pp, "tc_pp")):
        lower = 1.0 - q * core._inv_e(q, t)
        r.less(f"bound.F0({name})>1-q/E", lower, f0[t], floor=value_floor * f0[t])
        if name == "tc":
            r.less("bound.F0(tc)<1", f0[t], 1.0)
    g_lo, g_hi = gamma_c_envelope(s.t_c, q)
    r.less("bound.gamma_c>tc", g_lo, s.gamma_c)
    r.less("bound.gamma_c<envelope", s.gamma_c, g_hi)

    r.residual("residual.stationarity", f0[s.t_c] - s.t_c / s.gamma_c, RESIDUAL_TOL)
    r.residual("residual.criticality", core.criticality_residual(p, s.t_c, s.gamma_c, quad), RESIDUAL_TOL)

    y_lo, y_hi = q - 1.0, (q - 1.0) ** 1.5
    r.less("psi(q-1)>0", 0.0, core.psi(q, y_lo), floor=0.0)
    r.less("psi((q-1)^1.5)<0", core.psi(q, y_hi), 0.0, floor=0.0)
    Y = _find_Y(q)
    r.less("psi.Y>q/2", 0.5 * q, Y, floor=0.0)
    r.identity("psi.lnY=T", math.log(Y), s.T, IDENTITY_REL_TOL, note="Y located by bisection")

    ys = np.linspace(1.0, 10.0, 201)[1:]
    vph = np.array([core.varphi(float(y)) for y in ys])
    r.less("varphi>0", 0.0, float(vph.min()), floor=0.0)
    xi_err = max(abs(core.xi(float(y)) + v) / max(abs(v), 1.0) for y, v in zip(ys, vph))
    r.identity("xi=-varphi", xi_err, 0.0, 1e-12, relative=False)

    try:
        via_k2 = solve_tc_pp_detailed(p, cfg, "k2").root
        via_phi = solve_tc_pp_detailed(p, cfg, "phi").root
        r.identity("identity.phi_root=K2_root", via_phi, via_k2, ROOT_AGREEMENT_TOL, relative=False)
    except SolverError as exc:
        # tiny roots drown in rounding on the K'' route; Phi is the only usable handle there
        r.checks.append(Check("identity.phi_root=K2_root", "identity", True, math.nan, math.nan, math.nan,
                              INFO, f"not comparable, K'' route cannot resolve the root: {exc}"))

    # homogeneous-limit identities at a spread of t
    first_err = second_err = 0.0
    for t in np.linspace(0.25, 3.0, 12) * b:
        t = float(t)
        k0, k1, k2 = fam(t)
        first = (tau - 1.0) / (tau - 2.0) * k0 - t / (tau - 2.0) * k1
        second = k1 - t / (tau - 2.0) * k2
        first_err = max(first_err, abs(first - core.k_h(q, t)))
        second_err = max(second_err, abs(second - core.k_h_prime(q, t)))
    r.identity("identity.homogeneous_first", first_err, 0.0, HOMOGENEOUS_ABS_TOL, relative=False,
               note="(tau-1)/(tau-2) K - t/(tau-2) K' = K_H; printed variant adds t/(tau-2)^2")
    r.identity("identity.homogeneous_second", second_err, 0.0, HOMOGENEOUS_ABS_TOL, relative=False,
               note="K' - t/(tau-2) K'' = K_H'")

    lower = conjectured_tc_lower(p)
    if lower is None:
        r.checks.append(Check("conjecture.tc>2(tau-5)/(tau-4)b", "inequality", True, math.nan, s.t_c, math.nan,
                              INFO, "undefined at tau = 4"))
    else:
        r.less("conjecture.tc>2(tau-5)/(tau-4)b", lower, s.t_c, CONJECTURE)
    mu_lower, _ = moment_sandwich(p)
    if mu_lower is None:
        r.checks.append(Check("conjecture.tc>2mu3/mu4*b", "inequality", True, math.nan, s.t_c, math.nan,
                              INFO, "fourth moment diverges for tau <= 5"))
    else:
        r.less("conjecture.tc>2mu3/mu4*b", mu_lower, s.t_c, CONJECTURE)

    step = (tau - 3.0) / (tau - 2.0) * s.T
    r.info("info.newton_step_vs_tc_p", step, s.t_c_p, "step below root" if step < s.t_c_p else "step above root")

    names = [c.name for c in r.checks]
    assert tuple(names) == CHECK_NAMES, "check list drifted from CHECK_NAMES"


def _verify_point(args):
    q, tau, cfg = args
    try:
        p = ModelParams(q, tau)
    except InvalidParameters as exc:
        return VerificationReport(q, tau, None, [], "invalid_params", f"params: {exc}")
    return verify(p, cfg)


def verify_grid(
    qs: Sequence[float], taus: Sequence[float], cfg: Optional[RootSolveConfig] = None, jobs: int = 1
) -> List[VerificationReport]:
    """One report per (q, tau), row-major over ``qs`` then ``taus``."""
    cfg = cfg or RootSolveConfig()
    tasks = [(q, tau, cfg) for q in qs for tau in taus]
    if jobs <= 1:
        return [_verify_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_verify_point, tasks))

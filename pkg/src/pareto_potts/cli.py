"""Command-line front end.

Subcommands: critical, scan, verify, trace, asymptotic. Data goes to standard
output (or --out), diagnostics to standard error.

Exit codes: 0 success, 1 verification failure, 2 invalid parameters or
arguments, 3 solver or quadrature failure, 4 unwritable output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from typing import List, Optional, Sequence

import numpy as np

from . import core
from .asymptotics import (
    AsymptoticValidityWarning,
    TRUSTWORTHY_B,
    bounds,
    classify_regime,
    limit_ratios,
    regime_constants,
    small_b_tcpp_from_b,
)
from .core import InvalidParameters, ModelParams
from .quadrature import QuadratureError, QuadratureSettings, c_tau
from .solvers import RootSolveConfig, SolverError, _family, critical_summary
from .verifier import verify_grid

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_SOLVER, EXIT_OUTPUT = 0, 1, 2, 3, 4

CRITICAL_COLUMNS = ["q", "tau", "t_c_pp", "t_c_p", "t_c", "T", "gamma_c", "beta_c"]
BOUND_COLUMNS = ["tc_simple", "tcp_simple", "tcpp_simple", "tc_sharp", "tc_conjectured_lower", "T_lower", "T_upper"]
TRACE_COLUMNS = ["t", "K", "K1", "K2", "F0", "Phi"]
# below this ln(q-1) the trace evaluates K, K', K'' through Phi
TRACE_PHI_BELOW_B = 0.1


class UsageError(Exception):
    """Bad arguments detected after parsing; maps to exit code 2."""


def fmt(x) -> str:
    """17 significant digits: re-parsing gives back the identical double."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _config(args) -> RootSolveConfig:
    rtol = os.environ.get("POTTS_QUAD_RTOL")
    quad = QuadratureSettings()
    if rtol:
        try:
            quad = QuadratureSettings(rel_tol=float(rtol))
        except ValueError as exc:
            raise UsageError(f"POTTS_QUAD_RTOL={rtol!r}: {exc}") from exc
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return RootSolveConfig(tol_t=args.tol_t, quad=quad)


def _write(text: str, out: Optional[str]) -> int:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return EXIT_OK
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    return EXIT_OK


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _parse_tau(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _axis(single, lo, hi, steps, log: bool, name: str) -> List[float]:
    if single is not None:
        return [single]
    if lo is None or hi is None:
        raise UsageError(f"give --{name} or both --{name}-min and --{name}-max")
    if steps < 1:
        raise UsageError(f"--{name}-steps must be >= 1")
    if steps == 1 or lo == hi:
        return [lo]
    if log:
        if not (lo > 0 and hi > 0):
            raise UsageError("--log-q needs positive q bounds")
        return [float(v) for v in np.geomspace(lo, hi, steps)]
    return [float(v) for v in np.linspace(lo, hi, steps)]


# -- critical ----------------------------------------------------------------------

def _summary_row(s) -> List[str]:
    return [fmt(getattr(s, c)) for c in CRITICAL_COLUMNS]


def cmd_critical(args) -> int:
    cfg = _config(args)
    try:
        p = ModelParams(args.q, args.tau)
    except InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        s = critical_summary(p, cfg)
    except (SolverError, QuadratureError) as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if s.reduced_confidence:
        print("warning: t_c'' is tiny at this q; reported with reduced confidence", file=sys.stderr)
    if args.format == "csv":
        return _write(_csv_text(CRITICAL_COLUMNS, [_summary_row(s)]), args.out)
    return _write(json.dumps(_json_safe(asdict(s)), indent=2) + "\n", args.out)


# -- scan ----------------------------------------------------------------------------

def _scan_point(task):
    q, tau, cfg = task
    try:
        p = ModelParams(q, tau)
    except InvalidParameters as exc:
        return [fmt(q), fmt(tau)] + ["nan"] * (len(CRITICAL_COLUMNS) - 2 + len(BOUND_COLUMNS)) + [f"invalid: {exc}"]
    bs = bounds(p)
    bound_row = [
        fmt(bs.tc_simple),
        fmt(bs.tcp_simple),
        fmt(bs.tcpp_simple),
        fmt(bs.tc_sharp),
        fmt(math.nan if bs.tc_conjectured_lower is None else bs.tc_conjectured_lower),
        fmt(bs.T_bound_pair[0]),
        fmt(bs.T_bound_pair[1]),
    ]
    try:
        s = critical_summary(p, cfg)
    except (SolverError, QuadratureError) as exc:
        return [fmt(q), fmt(tau)] + ["nan"] * (len(CRITICAL_COLUMNS) - 2) + bound_row + [f"solver failure: {exc}"]
    note = "reduced confidence" if s.reduced_confidence else ""
    return _summary_row(s) + bound_row + [note]


def cmd_scan(args) -> int:
    cfg = _config(args)
    qs = _axis(args.q, args.q_min, args.q_max, args.q_steps, args.log_q, "q")
    taus = _axis(args.tau, args.tau_min, args.tau_max, args.tau_steps, False, "tau")
    tasks = [(q, tau, cfg) for q in qs for tau in taus]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_scan_point, tasks))
    else:
        rows = [_scan_point(t) for t in tasks]
    for row in rows:
        if row[-1]:
            print(f"note: q={row[0]} tau={row[1]}: {row[-1]}", file=sys.stderr)
    return _write(_csv_text(CRITICAL_COLUMNS + BOUND_COLUMNS + ["note"], rows), args.out)


# -- verify --------------------------------------------------------------------------

def cmd_verify(args) -> int:
    cfg = _config(args)
    qs = _axis(args.q, args.q_min, args.q_max, args.q_steps, args.log_q, "q")
    taus = _axis(args.tau, args.tau_min, args.tau_max, args.tau_steps, False, "tau")
    reports = verify_grid(qs, taus, cfg, jobs=args.jobs)
    payload = reports[0].to_dict() if len(reports) == 1 else [r.to_dict() for r in reports]
    code = _write(json.dumps(payload, indent=2) + "\n", args.out)
    if code:
        return code
    for r in reports:
        for c in r.failures(strict=args.strict):
            print(f"FAIL q={r.q:g} tau={r.tau:g} {c.name}: lhs={c.lhs!r} rhs={c.rhs!r} {c.note}", file=sys.stderr)
    if any(r.status == "invalid_params" for r in reports):
        for r in reports:
            if r.status == "invalid_params":
                print(f"error: q={r.q:g} tau={r.tau:g}: {r.failed_stage}", file=sys.stderr)
        return EXIT_INVALID
    if any(r.status == "solver_failure" for r in reports):
        return EXIT_SOLVER
    ok = all(r.strict_passed if args.strict else r.all_passed for r in reports)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# -- trace ---------------------------------------------------------------------------

def cmd_trace(args) -> int:
    cfg = _config(args)
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.t_max < args.t_min:
        raise UsageError("--t-max must be >= --t-min")
    if args.t_min <= 0 and not args.skip_singular:
        raise UsageError("--t-min must be > 0 for the K2 and Phi columns (or pass --skip-singular)")
    if args.t_min < 0:
        raise UsageError("t must be >= 0")
    ts = np.linspace(args.t_min, args.t_max, args.points) if args.points > 1 else np.array([args.t_min])

    homogeneous = math.isinf(args.tau) and args.tau > 0
    if homogeneous:
        if not args.q > 2:
            print(f"error: q must be > 2, got {args.q}", file=sys.stderr)
            return EXIT_INVALID
        rows = []
        for t in map(float, ts):
            k2 = core.k_h_double_prime(args.q, t) if t > 0 else None
            rows.append([fmt(t), fmt(core.k_h(args.q, t)), fmt(core.k_h_prime(args.q, t)), fmt(k2),
                         fmt(core.f0_h(args.q, t)), ""])
        return _write(_csv_text(TRACE_COLUMNS, rows), args.out)

    try:
        p = ModelParams(args.q, args.tau)
    except InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    route = "phi" if p.b < TRACE_PHI_BELOW_B else "d"
    fam = _family(p, cfg, route)
    rows = []
    try:
        for t in map(float, ts):
            if t > 0:
                k0, k1, k2 = fam(t)
                phi = core.phi(p, t, cfg.quad)
            else:
                k0, k1, k2, phi = 0.0, 0.0, None, None
            rows.append([fmt(t), fmt(k0), fmt(k1), fmt(k2), fmt(core.f0(p, t, cfg.quad)), fmt(phi)])
    except QuadratureError as exc:
        print(f"error: quadrature failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return _write(_csv_text(TRACE_COLUMNS, rows), args.out)


# -- asymptotic ----------------------------------------------------------------------

def cmd_asymptotic(args) -> int:
    cfg = _config(args)
    tau = args.tau
    if not tau >= 4:
        print(f"error: tau must be >= 4, got {tau}", file=sys.stderr)
        return EXIT_INVALID
    if args.b is not None:
        b = args.b
        if not b > 0:
            print("error: --b must be positive", file=sys.stderr)
            return EXIT_INVALID
    else:
        if not args.q > 2:
            print(f"error: q must be > 2, got {args.q}", file=sys.stderr)
            return EXIT_INVALID
        b = math.log(args.q - 1.0)
    out = {"tau": tau, "b": b, "q": math.exp(b) + 1.0 if args.q is None else args.q}
    out["limit_ratios"] = dict(zip(("t_c", "t_c_p", "t_c_pp"), limit_ratios(tau)))
    if math.isinf(tau):
        out["regime"] = "HOMOGENEOUS"
        out["t_c_pp_approx"] = b
        return _write(json.dumps(_json_safe(out), indent=2) + "\n", args.out)
    regime = classify_regime(tau)
    out["regime"] = regime.value
    try:
        out["constants"] = regime_constants(tau, cfg.quad)
        if 4 <= tau < 5:
            out["C_tau"] = c_tau(tau, cfg.quad)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AsymptoticValidityWarning)
            out["t_c_pp_approx"] = small_b_tcpp_from_b(tau, b, cfg.quad)
    except QuadratureError as exc:
        print(f"error: quadrature failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out["trustworthy"] = b < TRUSTWORTHY_B
    return _write(json.dumps(_json_safe(out), indent=2) + "\n", args.out)


# -- parser ----------------------------------------------------------------------------

def _add_grid_flags(sp, single_tau_type=float):
    sp.add_argument("--q", type=float)
    sp.add_argument("--q-min", type=float)
    sp.add_argument("--q-max", type=float)
    sp.add_argument("--q-steps", type=int, default=1)
    sp.add_argument("--log-q", action="store_true", help="geometric spacing in q")
    sp.add_argument("--tau", type=single_tau_type)
    sp.add_argument("--tau-min", type=float)
    sp.add_argument("--tau-max", type=float)
    sp.add_argument("--tau-steps", type=int, default=1)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (output order is fixed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pareto-potts",
        description="Critical points of the annealed Potts model on Pareto rank-1 graphs.",
    )
    parser.add_argument("--tol-t", type=float, default=1e-9, help="root tolerance in t (default 1e-9)")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("critical", help="t_c'', t_c', t_c, T, gamma_c, beta_c at one point")
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_critical)

    sp = sub.add_parser("scan", help="CSV of critical points and bounds over a grid")
    _add_grid_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("verify", help="run the bound and identity battery")
    _add_grid_flags(sp)
    sp.add_argument("--strict", action="store_true", help="conjecture checks count toward the exit status")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("trace", help="sample K, K', K'', F0, Phi for plotting")
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--tau", type=_parse_tau, required=True, help="'inf' selects the homogeneous family")
    sp.add_argument("--t-min", type=float, required=True)
    sp.add_argument("--t-max", type=float, required=True)
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--skip-singular", action="store_true", help="allow t <= 0; K2 and Phi left empty there")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("asymptotic", help="q -> 2 leading-order law and q -> inf limits")
    sp.add_argument("--tau", type=_parse_tau, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--q", type=float)
    g.add_argument("--b", type=float, help="ln(q-1)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_asymptotic)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for bad usage
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

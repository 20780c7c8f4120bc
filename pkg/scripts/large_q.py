"""Ratios t_c/b, t_c'/b, t_c''/b with b = ln(q-1) as q grows.

The limits are 2(tau-2)/(tau-1), 1 and 1. The last two converge slowly, roughly
like ln(b)/b, so they are still visibly off at q = 1e6.
"""

from __future__ import annotations

import argparse

import numpy as np

from pareto_potts import ModelParams, critical_summary
from pareto_potts.solvers import RootSolveConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--taus", type=float, nargs="+", default=[4.0, 6.0])
    ap.add_argument("--log10-q-max", type=float, default=8.0)
    ap.add_argument("--steps", type=int, default=8)
    args = ap.parse_args()

    cfg = RootSolveConfig()
    qs = np.logspace(1, args.log10_q_max, args.steps)
    for tau in args.taus:
        print(f"tau = {tau:g}   limit of t_c/b = {2 * (tau - 2) / (tau - 1):.6f}")
        print(f"{'q':>12} {'b':>8} {'t_c/b':>9} {'t_c_p/b':>9} {'t_c_pp/b':>9}")
        for q in qs:
            p = ModelParams(float(q), tau)
            s = critical_summary(p, cfg)
            print(f"{q:12.4g} {p.b:8.4f} {s.t_c / p.b:9.5f} {s.t_c_p / p.b:9.5f} {s.t_c_pp / p.b:9.5f}")
        print()


if __name__ == "__main__":
    main()

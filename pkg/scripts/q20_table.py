"""Reproduce the q=20 reference table: T, t_c', the Newton step (tau-3)/(tau-2) T and t_c."""

from __future__ import annotations

import argparse

from pareto_potts import ModelParams, critical_summary
from pareto_potts.solvers import RootSolveConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, default=20.0)
    ap.add_argument("--taus", type=float, nargs="+", default=[6.0, 11.0, 18.0])
    args = ap.parse_args()

    cfg = RootSolveConfig()
    print(f"{'tau':>6} {'T':>10} {'t_c_p':>10} {'step':>10} {'t_c':>10} {'gamma_c':>10}  step vs t_c_p")
    for tau in args.taus:
        s = critical_summary(ModelParams(args.q, tau), cfg)
        step = (tau - 3) / (tau - 2) * s.T
        rel = "below" if step < s.t_c_p else "above"
        print(f"{tau:6g} {s.T:10.6f} {s.t_c_p:10.6f} {step:10.6f} {s.t_c:10.6f} {s.gamma_c:10.6f}  {rel}")


if __name__ == "__main__":
    main()

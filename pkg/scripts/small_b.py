"""Behaviour of t_c'' as q decreases to 2 (b = ln(q-1) -> 0).

At tau = 7 the root approaches 2b/3. At tau = 4 it is exponentially small in
1/b and is compared with the envelope b exp(-4 C(4)/b). For very small b the
tau = 4 root underflows double precision and the solver reports it.
"""

from __future__ import annotations

import argparse
import math

from pareto_potts import ModelParams
from pareto_potts.quadrature import c_tau
from pareto_potts.solvers import RootSolveConfig, SolverError, solve_tc_pp


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bs", type=float, nargs="+", default=[0.5, 0.3, 0.2, 0.1, 0.05, 0.01, 1e-3, 1e-4])
    args = ap.parse_args()

    cfg = RootSolveConfig()
    c4 = c_tau(4.0, cfg.quad)
    print(f"{'b':>8} {'tau=7 ratio to 2b/3':>20} {'tau=4 t_c_pp':>14} {'envelope':>12}")
    for b in args.bs:
        q = 1.0 + math.exp(b)
        r7 = solve_tc_pp(ModelParams(q, 7.0), cfg) / (2.0 * b / 3.0)
        try:
            t4 = f"{solve_tc_pp(ModelParams(q, 4.0), cfg):14.4e}"
        except SolverError:
            t4 = f"{'underflow':>14}"
        env = b * math.exp(-4.0 * c4 / b)
        print(f"{b:8.3g} {r7:20.7f} {t4} {env:12.4e}")


if __name__ == "__main__":
    main()

"""Critical points of the annealed Potts model on rank-1 random graphs with Pareto weights."""

from .core import InvalidParameters, ModelParams
from .quadrature import QuadratureSettings
from .solvers import CriticalSummary, RootSolveConfig, SolverError, critical_summary

__all__ = [
    "CriticalSummary",
    "InvalidParameters",
    "ModelParams",
    "QuadratureSettings",
    "RootSolveConfig",
    "SolverError",
    "critical_summary",
]

"""Exact-rational branch-and-bound kernel with cut-based conflict learning."""

from .cuts import ReductionStrategy
from .model import (
    BoundAtom,
    BoundDisjunction,
    BoundKind,
    LinearConstraint,
    Problem,
    Variable,
    VarKind,
    build_problem,
)
from .search import SolveResult, SolverConfig, Stats, run_two_phase, solve

__all__ = [
    "BoundAtom",
    "BoundDisjunction",
    "BoundKind",
    "LinearConstraint",
    "Problem",
    "ReductionStrategy",
    "SolveResult",
    "SolverConfig",
    "Stats",
    "Variable",
    "VarKind",
    "build_problem",
    "run_two_phase",
    "solve",
]

__version__ = "0.1.0"

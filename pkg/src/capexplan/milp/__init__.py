"""Self-contained MILP engine: model container, simplex, branch-and-bound."""

from .model import (
    LinearConstraint,
    MilpModel,
    ModelError,
    NumericalFailure,
    Solution,
    SolveOptions,
    Status,
    Variable,
)
from .branch_and_bound import solve_milp
from .mps import export_mps, write_mps
from .simplex import solve_lp

__all__ = [
    "LinearConstraint",
    "MilpModel",
    "ModelError",
    "NumericalFailure",
    "Solution",
    "SolveOptions",
    "Status",
    "Variable",
    "export_mps",
    "solve_lp",
    "solve_milp",
    "write_mps",
]

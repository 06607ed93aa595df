"""Model container and solution types for the built-in MILP engine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from scipy import sparse

INT_TOL = 1e-6
FEAS_TOL = 1e-7


class ModelError(Exception):
    """Raised for ill-formed models (unknown variables, bad bounds, ...)."""


class NumericalFailure(Exception):
    """Raised when simplex pivoting stalls beyond the anti-cycling cap."""


class Status(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    GAP_LIMIT = "GapLimit"
    TIME_LIMIT = "TimeLimit"


LESS, EQUAL, GREATER = "<=", "==", ">="
_SENSES = (LESS, EQUAL, GREATER)


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    integer: bool = False
    objective: float = 0.0


@dataclass
class LinearConstraint:
    name: str
    coeffs: Dict[str, float]
    sense: str
    rhs: float


@dataclass
class SolveOptions:
    """Knobs shared by the LP and branch-and-bound solvers."""

    gap_tol: float = 1e-4
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    threads: int = 1
    integrality_tol: float = INT_TOL
    feasibility_tol: float = FEAS_TOL
    log: Optional[callable] = None  # called with a dict per search event


class MilpModel:
    """Mixed-integer linear program: variables, linear constraints, objective.

    Purely a container; solving happens in :mod:`capexplan.milp.simplex` and
    :mod:`capexplan.milp.branch_and_bound`.
    """

    def __init__(self, name: str = "model", sense: str = "maximize"):
        if sense not in ("maximize", "minimize"):
            raise ModelError(f"sense must be maximize or minimize, got {sense!r}")
        self.name = name
        self.sense = sense
        self.variables: List[Variable] = []
        self.constraints: List[LinearConstraint] = []
        self._index: Dict[str, int] = {}

    # -- construction -----------------------------------------------------

    def add_variable(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        integer: bool = False,
        objective: float = 0.0,
    ) -> str:
        if name in self._index:
            raise ModelError(f"duplicate variable {name!r}")
        if lower > upper + 1e-12:
            raise ModelError(f"variable {name!r}: lower {lower} > upper {upper}")
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lower), float(upper), integer, float(objective)))
        return name

    def add_constraint(self, name: str, coeffs: Dict[str, float], sense: str, rhs: float) -> str:
        if sense not in _SENSES:
            raise ModelError(f"constraint {name!r}: bad sense {sense!r}")
        for var in coeffs:
            if var not in self._index:
                raise ModelError(f"constraint {name!r} references unknown variable {var!r}")
        self.constraints.append(LinearConstraint(name, dict(coeffs), sense, float(rhs)))
        return name

    def set_objective(self, coeffs: Dict[str, float], sense: Optional[str] = None) -> None:
        if sense is not None:
            if sense not in ("maximize", "minimize"):
                raise ModelError(f"bad objective sense {sense!r}")
            self.sense = sense
        for v in self.variables:
            v.objective = 0.0
        for var, c in coeffs.items():
            self.variables[self.var_index(var)].objective = float(c)

    def fix_variable(self, name: str, value: float) -> None:
        v = self.variables[self.var_index(name)]
        v.lower = v.upper = float(value)

    def set_bounds(self, name: str, lower: float, upper: float) -> None:
        if lower > upper + 1e-12:
            raise ModelError(f"variable {name!r}: lower {lower} > upper {upper}")
        v = self.variables[self.var_index(name)]
        v.lower, v.upper = float(lower), float(upper)

    # -- queries -----------------------------------------------------------

    def var_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def num_variables(self) -> int:
        return len(self.variables)

    def num_constraints(self) -> int:
        return len(self.constraints)

    def num_integer_variables(self) -> int:
        return sum(1 for v in self.variables if v.integer)

    def check_integer_bounds(self) -> None:
        """Branch-and-bound termination needs finite bounds on integer vars."""
        for v in self.variables:
            if v.integer and not (math.isfinite(v.lower) and math.isfinite(v.upper)):
                raise ModelError(
                    f"integer variable {v.name!r} must have finite bounds, "
                    f"got [{v.lower}, {v.upper}]"
                )

    def compile(self) -> "CompiledProblem":
        """Freeze the model into array form for the solvers.

        Constraints are stored sparsely; single-variable rows are folded into
        variable bounds (the only presolve performed).
        """
        n = len(self.variables)
        lower = np.array([v.lower for v in self.variables], dtype=float)
        upper = np.array([v.upper for v in self.variables], dtype=float)
        cost = np.array([v.objective for v in self.variables], dtype=float)
        integer = np.array([v.integer for v in self.variables], dtype=bool)

        rows, cols, vals, senses, rhs = [], [], [], [], []
        infeasible = False
        for con in self.constraints:
            items = [(self.var_index(v), c) for v, c in con.coeffs.items() if c != 0.0]
            if len(items) == 1:
                j, a = items[0]
                b = con.rhs / a
                if con.sense == EQUAL:
                    lo, hi = b, b
                elif (con.sense == LESS) == (a > 0):
                    lo, hi = -math.inf, b
                else:
                    lo, hi = b, math.inf
                lower[j] = max(lower[j], lo)
                upper[j] = min(upper[j], hi)
                continue
            if not items:
                # constant row: keep only if it is violated outright
                viol = (
                    (con.sense == LESS and 0.0 > con.rhs + FEAS_TOL)
                    or (con.sense == GREATER and 0.0 < con.rhs - FEAS_TOL)
                    or (con.sense == EQUAL and abs(con.rhs) > FEAS_TOL)
                )
                infeasible = infeasible or viol
                continue
            r = len(rhs)
            for j, a in items:
                rows.append(r)
                cols.append(j)
                vals.append(float(a))
            senses.append(con.sense)
            rhs.append(float(con.rhs))

        if np.any(lower > upper + 1e-9):
            infeasible = True
        m = len(rhs)
        matrix = sparse.csc_matrix(
            (vals, (rows, cols)), shape=(m, n), dtype=float
        )
        return CompiledProblem(
            names=[v.name for v in self.variables],
            cost=cost,
            matrix=matrix,
            senses=list(senses),
            rhs=np.array(rhs, dtype=float),
            lower=lower,
            upper=upper,
            integer=integer,
            maximize=self.sense == "maximize",
            infeasible=infeasible,
        )


@dataclass
class CompiledProblem:
    names: List[str]
    cost: np.ndarray
    matrix: sparse.csc_matrix  # m x n, rows in sense/rhs order
    senses: List[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    maximize: bool
    infeasible: bool = False


@dataclass
class Solution:
    status: Status
    values: Dict[str, float] = field(default_factory=dict)
    objective: float = math.nan
    bound: float = math.nan
    relative_gap: float = math.nan
    node_count: int = 0
    iterations: int = 0
    runtime: float = 0.0

    @property
    def is_feasible(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.GAP_LIMIT) or (
            self.status == Status.TIME_LIMIT and bool(self.values)
        )

    def value(self, name: str) -> float:
        return self.values.get(name, 0.0)


def relative_gap(incumbent: float, bound: float) -> float:
    """|incumbent - bound| scaled by the incumbent magnitude."""
    if math.isnan(incumbent) or math.isnan(bound):
        return math.inf
    return abs(incumbent - bound) / max(1e-10, abs(incumbent))

"""Epsilon-constraint sweeps of the expected-NPV/risk trade-off.

A frontier is traced by re-solving the stochastic program over a grid of
targets: either minimize risk subject to an expected-NPV floor, or maximize
expected NPV subject to a risk cap. Failed and dominated grid points stay
in the raw log but are pruned from the frontier.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .formulation import InvestmentPlan, ObjectiveMode, build_stochastic, extract_plan
from .instance import Instance
from .milp.branch_and_bound import solve_milp
from .milp.model import SolveOptions, Status

DOMINANCE_TOL = 1e-6


class AllPointsInfeasible(Exception):
    """Raised when no grid point admits a feasible solution."""


@dataclass
class ParetoPoint:
    epsilon: float
    expected: float
    risk: float
    plan: Optional[InvestmentPlan]
    status: Status

    @property
    def solved(self) -> bool:
        return self.plan is not None


@dataclass
class ParetoFrontier:
    case_label: str
    points: List[ParetoPoint]  # pruned, sorted by expected NPV
    raw: List[ParetoPoint] = field(default_factory=list)  # every grid attempt

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def _weakly_dominates(b: ParetoPoint, a: ParetoPoint, tol=DOMINANCE_TOL) -> bool:
    """b is at least as good as a on both axes (within relative tolerance)."""
    return (
        b.expected >= a.expected - tol * abs(a.expected)
        and b.risk <= a.risk + tol * abs(a.risk)
    )


def _strictly_better_somewhere(b: ParetoPoint, a: ParetoPoint, tol=DOMINANCE_TOL) -> bool:
    return (
        b.expected > a.expected + tol * abs(a.expected)
        or b.risk < a.risk - tol * abs(a.risk)
    )


def _dominates(b: ParetoPoint, a: ParetoPoint) -> bool:
    return _weakly_dominates(b, a) and _strictly_better_somewhere(b, a)


def prune(points: Sequence[ParetoPoint]) -> List[ParetoPoint]:
    """Drop failed and dominated points; sort by expected NPV ascending."""
    solved = [p for p in points if p.solved]
    kept = [
        p
        for p in solved
        if not any(q is not p and _dominates(q, p) for q in solved)
    ]
    # duplicates (mutual weak dominance) collapse to the first occurrence
    unique: List[ParetoPoint] = []
    for p in sorted(kept, key=lambda p: (p.expected, p.risk)):
        if unique and _weakly_dominates(unique[-1], p) and _weakly_dominates(p, unique[-1]):
            continue
        unique.append(p)
    return unique


def default_grid(
    instance: Instance,
    count: int = 20,
    options: Optional[SolveOptions] = None,
    relax_storage_integrality: bool = False,
) -> List[float]:
    """Expected-NPV targets between the risk-minimal and maximal values.

    Pre-solves unconstrained risk minimization and expected-NPV
    maximization to find the interesting target range.
    """
    options = options or SolveOptions()
    lo_model, lo_atlas = build_stochastic(
        instance,
        ObjectiveMode(kind="min_risk", expected_target=None),
        relax_storage_integrality,
    )
    lo_sol = solve_milp(lo_model, options=options)
    hi_model, hi_atlas = build_stochastic(
        instance, ObjectiveMode.maximize_expected(), relax_storage_integrality
    )
    hi_sol = solve_milp(hi_model, options=options)
    if not (lo_sol.is_feasible and hi_sol.is_feasible):
        raise AllPointsInfeasible("pre-solves found no feasible solution")
    lo = extract_plan(lo_atlas, lo_sol).expected
    hi = extract_plan(hi_atlas, hi_sol).expected
    if count == 1 or hi - lo < 1e-9:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def sweep(
    instance: Instance,
    grid: Optional[Sequence[float]] = None,
    sweep_on: str = "expected",
    equality: bool = False,
    options: Optional[SolveOptions] = None,
    relax_storage_integrality: bool = False,
    case_label: str = "",
) -> ParetoFrontier:
    """Trace the frontier over a target grid (one solve per grid point).

    ``sweep_on="expected"`` minimizes risk at each expected-NPV target
    (equality or floor); ``sweep_on="risk"`` maximizes expected NPV under
    each risk cap. With no grid given, 20 uniform expected-NPV targets are
    derived from pre-solves.
    """
    options = options or SolveOptions()
    if sweep_on not in ("expected", "risk"):
        raise ValueError(f"sweep_on must be 'expected' or 'risk', got {sweep_on!r}")
    if grid is None:
        if sweep_on == "risk":
            raise ValueError("risk sweeps need an explicit grid")
        grid = default_grid(
            instance, options=options,
            relax_storage_integrality=relax_storage_integrality,
        )
    grid = sorted(float(e) for e in grid)
    if not grid:
        raise ValueError("empty epsilon grid")

    def solve_point(eps: float) -> ParetoPoint:
        if sweep_on == "expected":
            mode = ObjectiveMode.minimize_risk(eps, equality=equality)
        else:
            mode = ObjectiveMode.maximize_expected(risk_cap=eps)
        model, atlas = build_stochastic(instance, mode, relax_storage_integrality)
        solution = solve_milp(model, options=options)
        if not solution.is_feasible or not solution.values:
            return ParetoPoint(eps, math.nan, math.nan, None, solution.status)
        plan = extract_plan(atlas, solution)
        return ParetoPoint(eps, plan.expected, plan.risk, plan, solution.status)

    if options.threads > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            raw = list(pool.map(solve_point, grid))
    else:
        raw = [solve_point(eps) for eps in grid]

    if not any(p.solved for p in raw):
        raise AllPointsInfeasible(
            f"no feasible solution at any of the {len(raw)} grid points"
        )
    label = case_label or instance.label
    return ParetoFrontier(case_label=label, points=prune(raw), raw=raw)


@dataclass
class DominanceEntry:
    point: ParetoPoint
    dominated_by: Optional[ParetoPoint]
    strict: bool


@dataclass
class DominanceReport:
    frontier_a: str
    frontier_b: str
    entries: List[DominanceEntry]
    b_dominates_a: bool

    def summary(self) -> str:
        covered = sum(1 for e in self.entries if e.dominated_by is not None)
        verdict = (
            f"{self.frontier_b} dominates {self.frontier_a}"
            if self.b_dominates_a
            else "no dominance verdict"
        )
        return (
            f"{covered}/{len(self.entries)} points of {self.frontier_a} are "
            f"weakly dominated by {self.frontier_b}; {verdict}"
        )


def dominance_report(
    frontier_a: ParetoFrontier, frontier_b: ParetoFrontier
) -> DominanceReport:
    """Does frontier_b weakly cover every point of frontier_a?

    The verdict "b dominates a" needs every a-point weakly dominated by some
    b-point, with at least one strict improvement.
    """
    if not frontier_a.points or not frontier_b.points:
        raise ValueError("dominance comparison needs nonempty frontiers")
    entries = []
    any_strict = False
    all_covered = True
    for a in frontier_a.points:
        cover = None
        strict = False
        for b in frontier_b.points:
            if _weakly_dominates(b, a):
                if cover is None or _strictly_better_somewhere(b, cover):
                    cover = b
                strict = strict or _strictly_better_somewhere(b, a)
        entries.append(DominanceEntry(point=a, dominated_by=cover, strict=strict))
        all_covered = all_covered and cover is not None
        any_strict = any_strict or strict
    return DominanceReport(
        frontier_a=frontier_a.case_label or "A",
        frontier_b=frontier_b.case_label or "B",
        entries=entries,
        b_dominates_a=all_covered and any_strict,
    )


def frontier_csv(frontier: ParetoFrontier, include_raw: bool = False) -> str:
    """CSV rendering: epsilon, expected, risk, status, plan_id."""
    rows = ["epsilon,expected,risk,status,plan_id"]
    points = frontier.raw if include_raw else frontier.points
    for i, p in enumerate(points):
        plan_id = f"plan_{i:03d}" if p.solved else ""
        expected = "" if math.isnan(p.expected) else repr(p.expected)
        risk = "" if math.isnan(p.risk) else repr(p.risk)
        rows.append(f"{p.epsilon!r},{expected},{risk},{p.status.value},{plan_id}")
    return "\n".join(rows) + "\n"

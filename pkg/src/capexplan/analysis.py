"""Independent verification utilities: enumeration oracle and statistics.

:func:`brute_force_solve` finds exact optima of tiny instances without
touching the MILP engine: install decisions are enumerated outright and the
remaining storage/waste subproblem is closed either by dynamic programming
over the tree (expected-NPV objective) or by exhausting the integer lattice
(risk objectives). It is the trust anchor the branch-and-bound solver is
tested against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

from .formulation import (
    InvestmentPlan,
    ObjectiveMode,
    build_stochastic,
    evaluate_decisions,
)
from .instance import Instance, discount_factor, truncate_instance
from .milp.branch_and_bound import solve_milp
from .milp.model import SolveOptions
from .scenario_tree import NodeId


class EnumerationTooLarge(Exception):
    """Raised when the requested enumeration exceeds the safety limit."""


class OracleInfeasible(Exception):
    """No enumerated assignment satisfies the constraints."""


class EmptyOutcomes(Exception):
    pass


ENUMERATION_LIMIT = 10_000_000


@dataclass(frozen=True)
class ScenarioOutcome:
    """One root-to-leaf realization: probability, NPV, per-stage waste."""

    path: Tuple[NodeId, ...]
    probability: float
    npv: float
    waste_by_stage: Tuple[float, ...]

    @property
    def final_waste(self) -> float:
        return self.waste_by_stage[-1]

    @property
    def total_waste(self) -> float:
        return sum(self.waste_by_stage)


def outcomes_from_plan(instance: Instance, plan: InvestmentPlan) -> List[ScenarioOutcome]:
    """Leaf-indexed outcomes of a plan (probabilities, NPVs, waste paths)."""
    tree = instance.tree
    outcomes = []
    for leaf in tree.leaves():
        path = [leaf]
        node = leaf
        while (par := tree.parent.get(node)) is not None:
            path.append(par)
            node = par
        path.reverse()
        waste = tuple(
            sum(plan.decision(n).waste.values()) for n in path
        )
        outcomes.append(
            ScenarioOutcome(
                path=tuple(path),
                probability=tree.joint_prob[leaf],
                npv=plan.decision(leaf).cumulative_value,
                waste_by_stage=waste,
            )
        )
    return outcomes


def outcome_statistics(
    outcomes: List[ScenarioOutcome],
    metric: Union[str, Callable[[ScenarioOutcome], float]] = "npv",
) -> dict:
    """Probability-weighted mean and mean deviation, plus the sample std.

    The sample standard deviation uses the n-1 denominator over equally
    weighted outcomes and is reported as ``None`` when probabilities differ
    (there is no single unweighted sample in that case).
    """
    if not outcomes:
        raise EmptyOutcomes("no outcomes to summarize")
    total_p = sum(o.probability for o in outcomes)
    if abs(total_p - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {total_p!r}, not 1")
    if callable(metric):
        values = [metric(o) for o in outcomes]
    elif metric == "npv":
        values = [o.npv for o in outcomes]
    elif metric == "final_waste":
        values = [o.final_waste for o in outcomes]
    elif metric == "total_waste":
        values = [o.total_waste for o in outcomes]
    else:
        raise ValueError(f"unknown metric {metric!r}")

    mean = sum(o.probability * x for o, x in zip(outcomes, values))
    mean_dev = sum(o.probability * abs(x - mean) for o, x in zip(outcomes, values))
    equal_probs = all(
        abs(o.probability - 1.0 / len(outcomes)) <= 1e-9 for o in outcomes
    )
    sample_std = None
    if equal_probs and len(outcomes) > 1:
        arithmetic_mean = sum(values) / len(values)
        ss = sum((x - arithmetic_mean) ** 2 for x in values)
        sample_std = math.sqrt(ss / (len(values) - 1))
    return {"mean": mean, "mean_deviation": mean_dev, "sample_std": sample_std}


# -- exhaustive oracle -------------------------------------------------------


def _unit_caps(instance, u_bounds):
    """Per-(node, product, tech) install caps, honoring explicit overrides."""
    caps = {}
    for node in instance.tree.decision_nodes():
        for p in instance.products:
            for k in range(len(p.catalog)):
                derived = int(p.capacity_limit // p.catalog[k].capacity)
                if isinstance(u_bounds, dict):
                    cap = min(derived, u_bounds.get((node, p.id, k), derived))
                elif u_bounds is not None:
                    cap = min(derived, int(u_bounds))
                else:
                    cap = derived
                caps[node, p.id, k] = cap
    return caps


def _node_combos(instance, caps):
    """Per-(node, product) feasible install vectors with their (x, y) totals."""
    combos = {}
    for node in instance.tree.decision_nodes():
        for p in instance.products:
            options = []
            ranges = [range(caps[node, p.id, k] + 1) for k in range(len(p.catalog))]
            for counts in itertools.product(*ranges):
                x = sum(n * t.capacity for n, t in zip(counts, p.catalog))
                if x > p.capacity_limit:
                    continue
                y = sum(n * t.install_cost for n, t in zip(counts, p.catalog))
                options.append((counts, x, y))
            combos[node, p.id] = options
    return combos


def _ceil_int(value: float) -> int:
    return int(math.ceil(value - 1e-9))


def _floor_int(value: float) -> int:
    return int(math.floor(value + 1e-9))


class _FixedInstallations:
    """Derived state once the install counts are fixed: X, Y, consumption."""

    def __init__(self, instance, assignment):
        self.instance = instance
        tree = instance.tree
        self.x = {}
        self.y = {}
        self.X = {}
        self.Y = {}
        self.feasible = True
        for node in tree.nodes():
            parent = tree.parent.get(node)
            for p in instance.products:
                key = (node, p.id)
                counts = assignment.get(key)
                self.x[key] = (
                    sum(n * t.capacity for n, t in zip(counts, p.catalog))
                    if counts
                    else 0.0
                )
                self.y[key] = (
                    sum(n * t.install_cost for n, t in zip(counts, p.catalog))
                    if counts
                    else 0.0
                )
                if parent is None:
                    self.X[key] = 0.0
                else:
                    self.X[key] = self.X[parent, p.id] + self.x[parent, p.id]
                self.Y[key] = (self.Y[parent, p.id] if parent else 0.0) + self.y[key]
                if node.stage == tree.num_stages and self.X[key] > p.capacity_limit + 1e-9:
                    self.feasible = False
        if instance.budget_limit is not None and self.feasible:
            for leaf in tree.leaves():
                total = sum(self.Y[leaf, p.id] for p in instance.products)
                if total > instance.budget_limit + 1e-9:
                    self.feasible = False
                    break
        if self.feasible:
            self.consumed = {
                (node, p.id): sum(
                    instance.alpha(other.id, p.id) * self.X[node, other.id]
                    for other in instance.products
                )
                for node in tree.nodes()
                for p in instance.products
            }
            # raw-material rows at decision stages put a floor under the
            # parent's storage of each consumed product
            self.storage_floor = {}
            for node in tree.decision_nodes():
                parent = tree.parent.get(node)
                if parent is None:
                    continue
                for p in instance.products:
                    for other in instance.products:
                        a = instance.alpha(p.id, other.id)
                        if not a:
                            continue
                        need = a * self.X[node, p.id] - self.X[node, other.id]
                        if need > 1e-9:
                            key = (parent, other.id)
                            self.storage_floor[key] = max(
                                self.storage_floor.get(key, 0), _ceil_int(need)
                            )
                            # the root cannot store anything
                            if parent == instance.tree.root:
                                self.feasible = False

    def storage_range(self, node, pid):
        tree = self.instance.tree
        p = self.instance.product(pid)
        if node.stage in (1, tree.num_stages):
            hi = 0
        else:
            hi = int(p.storage_limit)
        lo = self.storage_floor.get((node, pid), 0) if hasattr(self, "storage_floor") else 0
        return lo, hi


def _expected_value_dp(fixed: _FixedInstallations):
    """Exact storage/waste DP for the expected-NPV objective.

    Products decouple once installs are fixed, so each runs its own DP over
    the tree with the carried-storage level as state. Waste is set to its
    per-node minimum, which is optimal whenever selling beats wasting.
    Returns (expected value, storage map, waste map) or None if infeasible.
    """
    instance = fixed.instance
    tree = instance.tree
    total = 0.0
    storage: Dict[Tuple[NodeId, str], float] = {}
    waste: Dict[Tuple[NodeId, str], float] = {}
    for p in instance.products:
        pid = p.id
        cache: Dict[Tuple[NodeId, int], Tuple[float, int, float]] = {}

        def value(node, sigma) -> Tuple[float, Optional[int], float]:
            key = (node, sigma)
            if key in cache:
                return cache[key]
            t = node.stage
            beta = discount_factor(instance, t)
            prob = tree.joint_prob[node]
            lo, hi = fixed.storage_range(node, pid)
            avail = fixed.X[node, pid] + sigma - fixed.consumed[node, pid]
            demand = instance.demands[node, pid]
            best = (-math.inf, None, 0.0)
            for s in range(lo, hi + 1):
                k_net = avail - s
                if k_net < -1e-9:
                    continue
                w = max(0, _ceil_int(k_net - demand))
                net = k_net - w
                stage_cost = (
                    fixed.y[node, pid]
                    + p.operating_cost * fixed.X[node, pid]
                    + p.storage_cost * s
                    + p.waste_cost * w
                )
                contrib = prob * beta * (p.selling_price * net - stage_cost)
                children = tree.children.get(node, [])
                downstream = 0.0
                ok = True
                for child in children:
                    child_val = value(child, s)[0]
                    if child_val == -math.inf:
                        ok = False
                        break
                    downstream += child_val
                if not ok:
                    continue
                candidate = contrib + downstream
                if candidate > best[0]:
                    best = (candidate, s, float(w))
            cache[key] = best
            return best

        root_val, _, _ = value(tree.root, 0)
        if root_val == -math.inf:
            return None
        total += root_val

        # walk the argmax choices back down to materialize decisions
        stack = [(tree.root, 0)]
        while stack:
            node, sigma = stack.pop()
            _, s_choice, w_choice = cache[node, sigma]
            storage[node, pid] = float(s_choice)
            waste[node, pid] = w_choice
            for child in tree.children.get(node, []):
                stack.append((child, s_choice))
    return total, storage, waste


def _enumerate_storage_waste(fixed: _FixedInstallations, limit: int):
    """Yield every feasible integer (storage, waste) assignment."""
    instance = fixed.instance
    tree = instance.tree
    nodes = list(tree.nodes())
    pairs = [(node, p.id) for node in nodes for p in instance.products]

    def choices(node, pid, sigma):
        p = instance.product(pid)
        lo, hi = fixed.storage_range(node, pid)
        avail = fixed.X[node, pid] + sigma - fixed.consumed[node, pid]
        demand = instance.demands[node, pid]
        out = []
        for s in range(lo, hi + 1):
            k_net = avail - s
            if k_net < -1e-9:
                continue
            w_lo = max(0, _ceil_int(k_net - demand))
            w_hi = _floor_int(k_net)
            for w in range(w_lo, w_hi + 1):
                out.append((s, w))
        return out

    count = [0]

    def rec(idx, storage, waste):
        if idx == len(pairs):
            count[0] += 1
            if count[0] > limit:
                raise EnumerationTooLarge(
                    f"storage/waste enumeration exceeded {limit}"
                )
            yield dict(storage), dict(waste)
            return
        node, pid = pairs[idx]
        parent = tree.parent.get(node)
        sigma = storage.get((parent, pid), 0) if parent else 0
        for s, w in choices(node, pid, sigma):
            storage[node, pid] = s
            waste[node, pid] = w
            yield from rec(idx + 1, storage, waste)
        storage.pop((node, pid), None)
        waste.pop((node, pid), None)

    yield from rec(0, {}, {})


def brute_force_solve(
    instance: Instance,
    u_bounds=None,
    mode: Optional[ObjectiveMode] = None,
    inner: str = "auto",
    limit: int = ENUMERATION_LIMIT,
) -> Tuple[InvestmentPlan, float]:
    """Exact optimum of a small instance by exhausting install decisions.

    ``u_bounds`` caps the install counts (int for a uniform cap, or a map
    keyed by (node, product, tech index)); defaults to the capacity-derived
    caps. ``inner`` picks how the storage/waste subproblem is closed:
    ``"dp"`` (expected-NPV only), ``"enumerate"``, or ``"auto"``.

    Returns the optimal plan and its objective value under ``mode``.
    """
    mode = mode or ObjectiveMode.maximize_expected()
    caps = _unit_caps(instance, u_bounds)
    size = 1
    for cap in caps.values():
        size *= cap + 1
        if size > limit:
            raise EnumerationTooLarge(
                f"install enumeration needs > {limit} assignments"
            )
    combos = _node_combos(instance, caps)
    keys = sorted(combos.keys(), key=lambda kv: (kv[0], kv[1]))
    use_dp = inner == "dp" or (
        inner == "auto" and mode.kind == "max_expected" and mode.risk_cap is None
    )
    if inner == "dp" and not (mode.kind == "max_expected" and mode.risk_cap is None):
        raise ValueError("dp inner solver only handles plain expected-NPV")

    best_obj = -math.inf
    best = None
    for selection in itertools.product(*(combos[k] for k in keys)):
        assignment = {k: sel[0] for k, sel in zip(keys, selection)}
        fixed = _FixedInstallations(instance, assignment)
        if not fixed.feasible:
            continue
        if use_dp:
            result = _expected_value_dp(fixed)
            if result is None:
                continue
            objective, storage, waste = result
            if objective > best_obj + 1e-12:
                best_obj = objective
                best = (assignment, storage, waste)
        else:
            for storage, waste in _enumerate_storage_waste(fixed, limit):
                units = {
                    k: {i: n for i, n in enumerate(counts) if n}
                    for k, counts in assignment.items()
                }
                state = evaluate_decisions(
                    instance, units, storage, waste, check=False
                )
                expected, risk = state["expected"], state["risk"]
                if mode.kind == "max_expected":
                    if mode.risk_cap is not None and risk > mode.risk_cap + 1e-9:
                        continue
                    objective = expected
                else:
                    target = mode.expected_target
                    if target is not None:
                        band = 1e-6 * abs(target)
                        if mode.target_is_equality:
                            if abs(expected - target) > band + 1e-9:
                                continue
                        elif expected < target - 1e-9:
                            continue
                    objective = -risk
                if objective > best_obj + 1e-12:
                    best_obj = objective
                    best = (assignment, dict(storage), dict(waste))

    if best is None:
        raise OracleInfeasible("every enumerated assignment was infeasible")
    assignment, storage, waste = best
    units = {
        k: {i: n for i, n in enumerate(counts) if n}
        for k, counts in assignment.items()
    }
    state = evaluate_decisions(instance, units, storage, waste, check=True)
    plan = _plan_from_state(instance, mode, units, storage, waste, state)
    objective = (
        state["risk"] if mode.kind == "min_risk" else state["expected"]
    )
    return plan, objective


def _plan_from_state(instance, mode, units, storage, waste, state):
    from .formulation import NodeDecision

    nodes = []
    pids = instance.product_ids()
    for node in instance.tree.nodes():
        node_units = {
            pid: dict(units.get((node, pid), {}))
            for pid in pids
            if any(units.get((node, pid), {}).values())
        }
        nodes.append(
            NodeDecision(
                node=node,
                units=node_units,
                added_capacity={
                    pid: state["added"][node, pid]
                    for pid in pids
                    if state["added"][node, pid]
                },
                install_cost=sum(state["install_cost"][node, pid] for pid in pids),
                storage={pid: float(storage.get((node, pid), 0.0)) for pid in pids},
                waste={pid: float(waste.get((node, pid), 0.0)) for pid in pids},
                net_sales={pid: state["net_sales"][node, pid] for pid in pids},
                cumulative_capacity={
                    pid: state["cum_capacity"][node, pid] for pid in pids
                },
                cash_flow=state["cash_flow"][node],
                cumulative_value=state["cum_value"][node],
            )
        )
    return InvestmentPlan(
        instance_label=instance.label,
        mode=mode.describe(),
        relaxed_storage=False,
        expected=state["expected"],
        risk=state["risk"],
        objective=state["expected"] if mode.kind == "max_expected" else state["risk"],
        nodes=nodes,
    )


def profitability_horizon(
    instance: Instance,
    max_stages: Optional[int] = None,
    options: Optional[SolveOptions] = None,
    relax_storage_integrality: bool = False,
) -> Optional[int]:
    """Smallest horizon at which investing beats doing nothing.

    Re-solves the expected-NPV problem on truncations of the instance's tree
    for 2..max_stages stages; returns the first stage count whose optimum is
    positive, or ``None`` when none is.
    """
    max_stages = max_stages or instance.tree.num_stages
    options = options or SolveOptions()
    for stages in range(2, max_stages + 1):
        sub = truncate_instance(instance, stages)
        model, atlas = build_stochastic(
            sub,
            ObjectiveMode.maximize_expected(),
            relax_storage_integrality=relax_storage_integrality,
        )
        solution = solve_milp(model, options=options)
        if solution.is_feasible and solution.objective > 1e-6:
            return stages
    return None

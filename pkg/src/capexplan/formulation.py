"""Builders that translate an instance into capacity-expansion MILPs.

Three problems are covered: the single-product deterministic program on a
linear horizon, and the stochastic single-/multi-product program on a
scenario tree with expected-NPV and mean-deviation-risk objectives. All
decisions are indexed by tree nodes, which enforces non-anticipativity
structurally. Capacity installed at a node raises cumulative capacity only
at its children (one-stage deployment delay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .instance import Instance, discount_factor
from .milp.model import MilpModel, Solution
from .scenario_tree import NodeId


class FormulationError(Exception):
    pass


class NotSingleProduct(FormulationError):
    pass


class NotDeterministicTree(FormulationError):
    pass


class MissingDemand(FormulationError):
    pass


class MissingAlphaEntry(FormulationError):
    pass


class InfeasibleSolutionProvided(FormulationError):
    pass


@dataclass(frozen=True)
class ObjectiveMode:
    """Which scalarization of {expected NPV, risk} a solve optimizes.

    ``max_expected`` maximizes expected NPV, optionally under a risk cap.
    ``min_risk`` minimizes risk while pinning expected NPV to a target,
    either exactly (narrow tolerance band) or as a lower bound.
    """

    kind: str  # "max_expected" | "min_risk"
    expected_target: Optional[float] = None
    target_is_equality: bool = True
    risk_cap: Optional[float] = None

    @staticmethod
    def maximize_expected(risk_cap: Optional[float] = None) -> "ObjectiveMode":
        return ObjectiveMode(kind="max_expected", risk_cap=risk_cap)

    @staticmethod
    def minimize_risk(expected_target: float, equality: bool = True) -> "ObjectiveMode":
        return ObjectiveMode(
            kind="min_risk",
            expected_target=float(expected_target),
            target_is_equality=equality,
        )

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.expected_target is not None:
            out["expected_target"] = self.expected_target
            out["target_is_equality"] = self.target_is_equality
        if self.risk_cap is not None:
            out["risk_cap"] = self.risk_cap
        return out

    @staticmethod
    def from_dict(d: dict) -> "ObjectiveMode":
        return ObjectiveMode(
            kind=d["kind"],
            expected_target=d.get("expected_target"),
            target_is_equality=d.get("target_is_equality", True),
            risk_cap=d.get("risk_cap"),
        )


@dataclass
class VariableAtlas:
    """Name map from model entities to MILP variable names."""

    instance: Instance
    mode: Optional[ObjectiveMode] = None
    relaxed_storage: bool = False
    u: Dict[Tuple[NodeId, str, int], str] = field(default_factory=dict)
    added_cap: Dict[Tuple[NodeId, str], str] = field(default_factory=dict)  # x
    stage_cost: Dict[Tuple[NodeId, str], str] = field(default_factory=dict)  # y
    cum_cap: Dict[Tuple[NodeId, str], str] = field(default_factory=dict)  # X
    cum_cost: Dict[Tuple[NodeId, str], str] = field(default_factory=dict)  # Y
    storage: Dict[Tuple[NodeId, str], str] = field(default_factory=dict)  # s
    waste: Dict[Tuple[NodeId, str], str] = field(default_factory=dict)  # w
    cost: Dict[NodeId, str] = field(default_factory=dict)  # q
    revenue: Dict[NodeId, str] = field(default_factory=dict)  # r
    cash_flow: Dict[NodeId, str] = field(default_factory=dict)  # v
    cum_value: Dict[NodeId, str] = field(default_factory=dict)  # V
    deviation: Dict[NodeId, str] = field(default_factory=dict)  # per-leaf |V - E|
    expected: Optional[str] = None
    risk: Optional[str] = None


def _unit_cap(product, k) -> int:
    """Finite install-count bound: capacity limit over unit size."""
    return int(math.floor(product.capacity_limit / product.catalog[k].capacity))


def _check_demands(instance: Instance) -> None:
    missing = [
        f"{pid}@{node}"
        for node in instance.tree.nodes()
        for pid in instance.product_ids()
        if (node, pid) not in instance.demands
    ]
    if missing:
        raise MissingDemand(f"missing demands: {', '.join(missing[:5])}"
                            + (" ..." if len(missing) > 5 else ""))


def _check_alpha(instance: Instance) -> None:
    ids = set(instance.product_ids())
    for (i, ip), value in instance.interdependency.items():
        if i not in ids or ip not in ids:
            raise MissingAlphaEntry(
                f"alpha({i},{ip}) references a product missing from the instance"
            )
        if value < 0:
            raise MissingAlphaEntry(f"alpha({i},{ip}) is negative")


def _add_node_variables(model, atlas, instance, node, relax_sw):
    """Variables and definition rows shared by all builders, for one node."""
    tree = instance.tree
    t, j = node
    is_root = node == tree.root
    is_leaf = t == tree.num_stages
    is_decision = t < tree.num_stages
    parent = tree.parent.get(node)
    tag = f"[{t},{j}]"

    for p in instance.products:
        pid = p.id
        if is_decision:
            for k in range(len(p.catalog)):
                atlas.u[node, pid, k] = model.add_variable(
                    f"u{tag}[{pid}][{k}]", 0, _unit_cap(p, k), integer=True
                )
            atlas.added_cap[node, pid] = model.add_variable(f"x{tag}[{pid}]", 0)
            atlas.stage_cost[node, pid] = model.add_variable(f"y{tag}[{pid}]", 0)
            model.add_constraint(
                f"def_x{tag}[{pid}]",
                {atlas.added_cap[node, pid]: 1.0}
                | {
                    atlas.u[node, pid, k]: -p.catalog[k].capacity
                    for k in range(len(p.catalog))
                },
                "==",
                0.0,
            )
            model.add_constraint(
                f"def_y{tag}[{pid}]",
                {atlas.stage_cost[node, pid]: 1.0}
                | {
                    atlas.u[node, pid, k]: -p.catalog[k].install_cost
                    for k in range(len(p.catalog))
                },
                "==",
                0.0,
            )

        x_upper = p.capacity_limit if is_leaf else math.inf
        atlas.cum_cap[node, pid] = model.add_variable(f"X{tag}[{pid}]", 0, x_upper)
        atlas.cum_cost[node, pid] = model.add_variable(f"Y{tag}[{pid}]", 0)
        if is_root:
            model.add_constraint(
                f"def_X{tag}[{pid}]", {atlas.cum_cap[node, pid]: 1.0}, "==", 0.0
            )
            coeffs = {atlas.cum_cost[node, pid]: 1.0}
            if is_decision:
                coeffs[atlas.stage_cost[node, pid]] = -1.0
            model.add_constraint(f"def_Y{tag}[{pid}]", coeffs, "==", 0.0)
        else:
            model.add_constraint(
                f"def_X{tag}[{pid}]",
                {
                    atlas.cum_cap[node, pid]: 1.0,
                    atlas.cum_cap[parent, pid]: -1.0,
                    atlas.added_cap[parent, pid]: -1.0,
                },
                "==",
                0.0,
            )
            coeffs = {
                atlas.cum_cost[node, pid]: 1.0,
                atlas.cum_cost[parent, pid]: -1.0,
            }
            if is_decision:
                coeffs[atlas.stage_cost[node, pid]] = -1.0
            model.add_constraint(f"def_Y{tag}[{pid}]", coeffs, "==", 0.0)

        s_upper = 0.0 if (is_root or is_leaf) else p.storage_limit
        atlas.storage[node, pid] = model.add_variable(
            f"s{tag}[{pid}]", 0, s_upper, integer=not relax_sw
        )
        w_upper = 0.0 if is_root else p.capacity_limit + p.storage_limit
        atlas.waste[node, pid] = model.add_variable(
            f"w{tag}[{pid}]", 0, w_upper, integer=not relax_sw
        )

    atlas.cost[node] = model.add_variable(f"q{tag}", -math.inf)
    atlas.revenue[node] = model.add_variable(f"r{tag}", -math.inf)
    atlas.cash_flow[node] = model.add_variable(f"v{tag}", -math.inf)
    atlas.cum_value[node] = model.add_variable(f"V{tag}", -math.inf)


def _net_sales_coeffs(atlas, instance, node, pid):
    """Coefficient map of net sales of ``pid`` at ``node``.

    Net sales = carried storage + production - stored - wasted - amounts
    consumed as raw material by the other products.
    """
    parent = instance.tree.parent.get(node)
    coeffs = {
        atlas.cum_cap[node, pid]: 1.0,
        atlas.storage[node, pid]: -1.0,
        atlas.waste[node, pid]: -1.0,
    }
    if parent is not None:
        coeffs[atlas.storage[parent, pid]] = 1.0
    for other in instance.product_ids():
        a = instance.alpha(other, pid)
        if a:
            key = atlas.cum_cap[node, other]
            coeffs[key] = coeffs.get(key, 0.0) - a
    return coeffs


def _add_node_economics(model, atlas, instance, node):
    """Demand window, stage cost/revenue and cash-flow rows for one node."""
    t, j = node
    tag = f"[{t},{j}]"
    parent = instance.tree.parent.get(node)
    is_decision = t < instance.tree.num_stages
    beta = discount_factor(instance, t)

    q_coeffs = {atlas.cost[node]: 1.0}
    r_coeffs = {atlas.revenue[node]: 1.0}
    for p in instance.products:
        pid = p.id
        demand = instance.demands[node, pid]
        net = _net_sales_coeffs(atlas, instance, node, pid)
        model.add_constraint(f"win_lo{tag}[{pid}]", net, ">=", 0.0)
        model.add_constraint(f"win_hi{tag}[{pid}]", net, "<=", float(demand))
        if is_decision:
            q_coeffs[atlas.stage_cost[node, pid]] = -1.0
        q_coeffs[atlas.cum_cap[node, pid]] = (
            q_coeffs.get(atlas.cum_cap[node, pid], 0.0) - p.operating_cost
        )
        q_coeffs[atlas.storage[node, pid]] = -p.storage_cost
        q_coeffs[atlas.waste[node, pid]] = -p.waste_cost
        for var, c in net.items():
            r_coeffs[var] = r_coeffs.get(var, 0.0) - p.selling_price * c
        if is_decision:
            for other in instance.products:
                a = instance.alpha(pid, other.id)
                if a:
                    # raw-material availability: consumption of `other` by
                    # producing `pid` cannot exceed what is on hand
                    coeffs = {
                        atlas.cum_cap[node, pid]: a,
                        atlas.cum_cap[node, other.id]: -1.0,
                    }
                    if parent is not None:
                        coeffs[atlas.storage[parent, other.id]] = -1.0
                    model.add_constraint(
                        f"raw{tag}[{pid}->{other.id}]", coeffs, "<=", 0.0
                    )
    model.add_constraint(f"def_q{tag}", q_coeffs, "==", 0.0)
    model.add_constraint(f"def_r{tag}", r_coeffs, "==", 0.0)

    v_coeffs = {
        atlas.cash_flow[node]: 1.0,
        atlas.revenue[node]: -beta,
        atlas.cost[node]: beta,
    }
    model.add_constraint(f"def_v{tag}", v_coeffs, "==", 0.0)
    V_coeffs = {atlas.cum_value[node]: 1.0, atlas.cash_flow[node]: -1.0}
    if parent is not None:
        V_coeffs[atlas.cum_value[parent]] = -1.0
    model.add_constraint(f"def_V{tag}", V_coeffs, "==", 0.0)


def _add_budget(model, atlas, instance):
    if instance.budget_limit is None:
        return
    for leaf in instance.tree.leaves():
        model.add_constraint(
            f"budget[{leaf.stage},{leaf.scenario}]",
            {atlas.cum_cost[leaf, pid]: 1.0 for pid in instance.product_ids()},
            "<=",
            float(instance.budget_limit),
        )


def build_deterministic(instance: Instance) -> Tuple[MilpModel, VariableAtlas]:
    """Single-product NPV maximization on a deterministic (linear) horizon."""
    if not instance.is_single_product():
        raise NotSingleProduct(
            f"deterministic builder needs one product, got {len(instance.products)}"
        )
    if not instance.tree.is_deterministic():
        raise NotDeterministicTree("tree has branching; use build_stochastic")
    _check_demands(instance)

    model = MilpModel(name="capacity-expansion-deterministic", sense="maximize")
    atlas = VariableAtlas(instance=instance)
    for node in instance.tree.nodes():
        _add_node_variables(model, atlas, instance, node, relax_sw=False)
    for node in instance.tree.nodes():
        _add_node_economics(model, atlas, instance, node)
    _add_budget(model, atlas, instance)
    last = NodeId(instance.tree.num_stages, 1)
    model.set_objective({atlas.cum_value[last]: 1.0}, sense="maximize")
    return model, atlas


def linearize_risk(model: MilpModel, atlas: VariableAtlas, tree) -> None:
    """Add mean-deviation risk rows.

    Each leaf gets an auxiliary bounded below by |V_leaf - expected|; risk is
    their probability-weighted sum. The auxiliaries over-estimate freely, so
    risk is exact only when the objective or a risk cap presses them down;
    reports therefore recompute risk from the cash flows.
    """
    expected = atlas.expected
    risk = atlas.risk
    for leaf in tree.leaves():
        tag = f"[{leaf.stage},{leaf.scenario}]"
        dev = model.add_variable(f"dev{tag}", 0)
        atlas.deviation[leaf] = dev
        v_leaf = atlas.cum_value[leaf]
        model.add_constraint(
            f"dev_pos{tag}", {dev: 1.0, v_leaf: -1.0, expected: 1.0}, ">=", 0.0
        )
        model.add_constraint(
            f"dev_neg{tag}", {dev: 1.0, v_leaf: 1.0, expected: -1.0}, ">=", 0.0
        )
    model.add_constraint(
        "def_risk",
        {risk: 1.0}
        | {atlas.deviation[leaf]: -tree.joint_prob[leaf] for leaf in tree.leaves()},
        "==",
        0.0,
    )


def build_stochastic(
    instance: Instance,
    mode: ObjectiveMode,
    relax_storage_integrality: bool = False,
) -> Tuple[MilpModel, VariableAtlas]:
    """Stochastic (single- or multi-product) program on the scenario tree."""
    _check_demands(instance)
    _check_alpha(instance)
    tree = instance.tree

    model = MilpModel(name="capacity-expansion-stochastic", sense="maximize")
    atlas = VariableAtlas(
        instance=instance, mode=mode, relaxed_storage=relax_storage_integrality
    )
    for node in tree.nodes():
        _add_node_variables(
            model, atlas, instance, node, relax_sw=relax_storage_integrality
        )
    for node in tree.nodes():
        _add_node_economics(model, atlas, instance, node)
    _add_budget(model, atlas, instance)

    atlas.expected = model.add_variable("E_npv", -math.inf)
    atlas.risk = model.add_variable("R_npv", 0)
    model.add_constraint(
        "def_expected",
        {atlas.expected: 1.0}
        | {atlas.cum_value[leaf]: -tree.joint_prob[leaf] for leaf in tree.leaves()},
        "==",
        0.0,
    )
    linearize_risk(model, atlas, tree)

    if mode.kind == "max_expected":
        model.set_objective({atlas.expected: 1.0}, sense="maximize")
        if mode.risk_cap is not None:
            model.add_constraint(
                "risk_cap", {atlas.risk: 1.0}, "<=", float(mode.risk_cap)
            )
    elif mode.kind == "min_risk":
        model.set_objective({atlas.risk: 1.0}, sense="minimize")
        if mode.expected_target is not None:
            target = float(mode.expected_target)
            if mode.target_is_equality:
                band = 1e-6 * abs(target)
                model.add_constraint(
                    "expected_hi", {atlas.expected: 1.0}, "<=", target + band
                )
                model.add_constraint(
                    "expected_lo", {atlas.expected: 1.0}, ">=", target - band
                )
            else:
                model.add_constraint(
                    "expected_lo", {atlas.expected: 1.0}, ">=", target
                )
    else:
        raise FormulationError(f"unknown objective mode {mode.kind!r}")
    return model, atlas


# -- plan extraction ---------------------------------------------------------


@dataclass
class NodeDecision:
    node: NodeId
    units: Dict[str, Dict[int, int]]  # pid -> catalog index -> count
    added_capacity: Dict[str, float]
    install_cost: float
    storage: Dict[str, float]
    waste: Dict[str, float]
    net_sales: Dict[str, float]
    cumulative_capacity: Dict[str, float]
    cash_flow: float
    cumulative_value: float

    def installed_summary(self, instance: Instance) -> Dict[str, str]:
        """Human-readable per-product install summary, e.g. ``1200x2``."""
        out = {}
        for pid, counts in self.units.items():
            catalog = instance.product(pid).catalog
            parts = [
                f"{catalog[k].capacity:g}x{n}"
                for k, n in sorted(counts.items())
                if n
            ]
            if parts:
                out[pid] = " + ".join(parts)
        return out


@dataclass
class InvestmentPlan:
    instance_label: str
    mode: Optional[dict]
    relaxed_storage: bool
    expected: float
    risk: float
    objective: float
    nodes: List[NodeDecision]

    def decision(self, node: NodeId) -> NodeDecision:
        for entry in self.nodes:
            if entry.node == NodeId(*node):
                return entry
        raise KeyError(f"no node {node} in plan")

    def installed_capacities(self, pid: Optional[str] = None) -> Dict[NodeId, float]:
        """Added capacity per decision node (summed over products by default)."""
        out = {}
        for entry in self.nodes:
            caps = entry.added_capacity
            if pid is not None:
                if pid in caps:
                    out[entry.node] = caps[pid]
            elif caps:
                out[entry.node] = sum(caps.values())
        return out

    def total_units(self, instance: Instance, pid: str) -> Dict[float, int]:
        """Multiset {unit capacity: count} installed over the whole horizon."""
        catalog = instance.product(pid).catalog
        out: Dict[float, int] = {}
        for entry in self.nodes:
            for k, n in entry.units.get(pid, {}).items():
                if n:
                    cap = catalog[k].capacity
                    out[cap] = out.get(cap, 0) + n
        return out

    def to_dict(self) -> dict:
        return {
            "instance_label": self.instance_label,
            "mode": self.mode,
            "relaxed_storage": self.relaxed_storage,
            "expected": self.expected,
            "risk": self.risk,
            "objective": self.objective,
            "nodes": [
                {
                    "stage": e.node.stage,
                    "scenario": e.node.scenario,
                    "units": {
                        pid: {str(k): n for k, n in counts.items() if n}
                        for pid, counts in e.units.items()
                    },
                    "added_capacity": e.added_capacity,
                    "install_cost": e.install_cost,
                    "storage": e.storage,
                    "waste": e.waste,
                    "net_sales": e.net_sales,
                    "cumulative_capacity": e.cumulative_capacity,
                    "cash_flow": e.cash_flow,
                    "cumulative_value": e.cumulative_value,
                }
                for e in self.nodes
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "InvestmentPlan":
        nodes = [
            NodeDecision(
                node=NodeId(e["stage"], e["scenario"]),
                units={
                    pid: {int(k): int(n) for k, n in counts.items()}
                    for pid, counts in e["units"].items()
                },
                added_capacity=e["added_capacity"],
                install_cost=e["install_cost"],
                storage=e["storage"],
                waste=e["waste"],
                net_sales=e["net_sales"],
                cumulative_capacity=e["cumulative_capacity"],
                cash_flow=e["cash_flow"],
                cumulative_value=e["cumulative_value"],
            )
            for e in d["nodes"]
        ]
        return InvestmentPlan(
            instance_label=d.get("instance_label", ""),
            mode=d.get("mode"),
            relaxed_storage=bool(d.get("relaxed_storage", False)),
            expected=d["expected"],
            risk=d["risk"],
            objective=d["objective"],
            nodes=nodes,
        )


def evaluate_decisions(
    instance: Instance,
    units: Dict[Tuple[NodeId, str], Dict[int, int]],
    storage: Dict[Tuple[NodeId, str], float],
    waste: Dict[Tuple[NodeId, str], float],
    check: bool = True,
) -> dict:
    """Recompute all derived quantities from raw decisions.

    Walks the definitional recursions directly (no solver), returning
    per-node trajectories plus expected NPV and mean-deviation risk. With
    ``check`` enabled, demand-window, limit, and budget violations beyond a
    small tolerance raise :class:`InfeasibleSolutionProvided`.
    """
    tree = instance.tree
    tol = 1e-6
    X: Dict[Tuple[NodeId, str], float] = {}
    Y: Dict[Tuple[NodeId, str], float] = {}
    added: Dict[Tuple[NodeId, str], float] = {}
    inst_cost: Dict[Tuple[NodeId, str], float] = {}
    net: Dict[Tuple[NodeId, str], float] = {}
    q: Dict[NodeId, float] = {}
    r: Dict[NodeId, float] = {}
    v: Dict[NodeId, float] = {}
    V: Dict[NodeId, float] = {}
    violations: List[str] = []

    for node in tree.nodes():
        t = node.stage
        parent = tree.parent.get(node)
        is_decision = t < tree.num_stages
        beta = discount_factor(instance, t)
        q_val = 0.0
        r_val = 0.0
        for p in instance.products:
            pid = p.id
            counts = units.get((node, pid), {}) if is_decision else {}
            x_val = sum(p.catalog[k].capacity * n for k, n in counts.items())
            y_val = sum(p.catalog[k].install_cost * n for k, n in counts.items())
            added[node, pid] = x_val
            inst_cost[node, pid] = y_val
            X[node, pid] = (
                0.0 if parent is None else X[parent, pid] + added[parent, pid]
            )
            Y[node, pid] = (0.0 if parent is None else Y[parent, pid]) + y_val
        for p in instance.products:
            pid = p.id
            y_val = inst_cost[node, pid]
            s_val = float(storage.get((node, pid), 0.0))
            w_val = float(waste.get((node, pid), 0.0))
            s_par = float(storage.get((parent, pid), 0.0)) if parent else 0.0
            consumed = sum(
                instance.alpha(other, pid) * X[node, other]
                for other in instance.product_ids()
            )
            net_val = s_par + X[node, pid] - s_val - w_val - consumed
            net[node, pid] = net_val
            if check:
                demand = instance.demands.get((node, pid), 0.0)
                if net_val < -tol or net_val > demand + tol:
                    violations.append(
                        f"net sales of {pid} at {node} = {net_val:g} outside "
                        f"[0, {demand:g}]"
                    )
                if s_val < -tol or s_val > p.storage_limit + tol:
                    violations.append(f"storage of {pid} at {node} exceeds limit")
                if (parent is None or t == tree.num_stages) and s_val > tol:
                    violations.append(f"boundary storage at {node} must be zero")
                if w_val < -tol:
                    violations.append(f"negative waste at {node}")
                if t == tree.num_stages and X[node, pid] > p.capacity_limit + tol:
                    violations.append(f"capacity limit of {pid} exceeded at {node}")
                if is_decision:
                    for other in instance.products:
                        a = instance.alpha(pid, other.id)
                        if a and a * X[node, pid] > (
                            (storage.get((parent, other.id), 0.0) if parent else 0.0)
                            + X[node, other.id]
                            + tol
                        ):
                            violations.append(
                                f"raw material {other.id} unavailable for {pid} "
                                f"at {node}"
                            )
            q_val += (
                y_val
                + p.operating_cost * X[node, pid]
                + p.storage_cost * s_val
                + p.waste_cost * w_val
            )
            r_val += p.selling_price * net_val
        q[node] = q_val
        r[node] = r_val
        v[node] = beta * (r_val - q_val)
        V[node] = (V[parent] if parent else 0.0) + v[node]

    if check and instance.budget_limit is not None:
        for leaf in tree.leaves():
            total = sum(Y[leaf, pid] for pid in instance.product_ids())
            if total > instance.budget_limit + tol:
                violations.append(
                    f"installation budget exceeded on path to {leaf}: {total:g}"
                )
    if check and violations:
        raise InfeasibleSolutionProvided("; ".join(violations[:8]))

    leaves = tree.leaves()
    expected = sum(tree.joint_prob[leaf] * V[leaf] for leaf in leaves)
    risk = sum(tree.joint_prob[leaf] * abs(V[leaf] - expected) for leaf in leaves)
    return {
        "added": added,
        "install_cost": inst_cost,
        "cum_capacity": X,
        "cum_cost": Y,
        "net_sales": net,
        "cost": q,
        "revenue": r,
        "cash_flow": v,
        "cum_value": V,
        "expected": expected,
        "risk": risk,
    }


def decisions_from_solution(atlas: VariableAtlas, solution: Solution):
    """Round the integer decisions out of a solver solution."""
    instance = atlas.instance
    units: Dict[Tuple[NodeId, str], Dict[int, int]] = {}
    storage: Dict[Tuple[NodeId, str], float] = {}
    waste: Dict[Tuple[NodeId, str], float] = {}
    for (node, pid, k), name in atlas.u.items():
        units.setdefault((node, pid), {})[k] = int(round(solution.value(name)))
    for (node, pid), name in atlas.storage.items():
        value = solution.value(name)
        storage[node, pid] = (
            value if atlas.relaxed_storage else float(round(value))
        )
    for (node, pid), name in atlas.waste.items():
        value = solution.value(name)
        waste[node, pid] = value if atlas.relaxed_storage else float(round(value))
    return units, storage, waste


def extract_plan(atlas: VariableAtlas, solution: Solution) -> InvestmentPlan:
    """Turn a feasible solution into an investment plan report.

    Derived quantities (capacities, cash flows, expected NPV, risk) are
    recomputed from the rounded decisions rather than read off the solver,
    so the plan is internally consistent to full precision and the reported
    risk is the true mean deviation even when the solve did not press the
    risk auxiliaries tight.
    """
    if not solution.is_feasible or not solution.values:
        raise InfeasibleSolutionProvided(
            f"cannot extract a plan from a {solution.status.value} solution"
        )
    instance = atlas.instance
    units, storage, waste = decisions_from_solution(atlas, solution)
    state = evaluate_decisions(instance, units, storage, waste)

    nodes = []
    for node in instance.tree.nodes():
        pids = instance.product_ids()
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
                storage={pid: storage.get((node, pid), 0.0) for pid in pids},
                waste={pid: waste.get((node, pid), 0.0) for pid in pids},
                net_sales={pid: state["net_sales"][node, pid] for pid in pids},
                cumulative_capacity={
                    pid: state["cum_capacity"][node, pid] for pid in pids
                },
                cash_flow=state["cash_flow"][node],
                cumulative_value=state["cum_value"][node],
            )
        )
    mode = atlas.mode.describe() if atlas.mode else None
    if atlas.mode is None:
        objective = state["cum_value"][NodeId(instance.tree.num_stages, 1)]
    elif atlas.mode.kind == "min_risk":
        objective = state["risk"]
    else:
        objective = state["expected"]
    return InvestmentPlan(
        instance_label=instance.label,
        mode=mode,
        relaxed_storage=atlas.relaxed_storage,
        expected=state["expected"],
        risk=state["risk"],
        objective=objective,
        nodes=nodes,
    )


def evaluate_plan(instance: Instance, plan: InvestmentPlan) -> dict:
    """Re-evaluate a plan's decisions against an instance (round-trip check)."""
    units = {}
    storage = {}
    waste = {}
    for entry in plan.nodes:
        for pid, counts in entry.units.items():
            units[entry.node, pid] = dict(counts)
        for pid, val in entry.storage.items():
            storage[entry.node, pid] = val
        for pid, val in entry.waste.items():
            waste[entry.node, pid] = val
    return evaluate_decisions(instance, units, storage, waste)

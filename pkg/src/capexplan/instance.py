"""Economic and technological data for a capacity-expansion instance.

An :class:`Instance` couples a scenario tree with per-product technology
catalogs, prices/costs, capacity and storage limits, product
interdependencies, and per-node demands. Validation returns diagnostics
instead of raising so callers can report every problem at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .scenario_tree import NodeId, ScenarioTree


class StageOutOfRange(Exception):
    """Raised when a stage index falls outside the planning horizon."""


@dataclass(frozen=True)
class TechnologyOption:
    """One installable technology: production units per stage and its cost."""

    capacity: float
    install_cost: float


@dataclass(frozen=True)
class ProductSpec:
    id: str
    catalog: Tuple[TechnologyOption, ...]
    storage_cost: float
    waste_cost: float
    operating_cost: float
    selling_price: float
    capacity_limit: float
    storage_limit: float

    def __post_init__(self):
        object.__setattr__(self, "catalog", tuple(self.catalog))


@dataclass
class Instance:
    """Full problem data: tree, products, interdependencies, demands, limits.

    ``interdependency[(i, ip)]`` is the amount of product ``ip`` consumed per
    unit of product ``i`` produced. ``demands[(node, product_id)]`` is the
    demand ceiling at that node. ``budget_limit`` of ``None`` disables the
    cumulative installation-cost constraint.
    """

    tree: ScenarioTree
    products: List[ProductSpec]
    interdependency: Dict[Tuple[str, str], float] = field(default_factory=dict)
    demands: Dict[Tuple[NodeId, str], float] = field(default_factory=dict)
    budget_limit: Optional[float] = None
    interest_rate: float = 0.0
    label: str = ""
    # optional named catalog subsets ("Case 1" keeps only some technologies)
    cases: Dict[str, Dict[str, List[int]]] = field(default_factory=dict)

    def product_ids(self) -> List[str]:
        return [p.id for p in self.products]

    def product(self, pid: str) -> ProductSpec:
        for p in self.products:
            if p.id == pid:
                return p
        raise KeyError(f"unknown product {pid!r}")

    def alpha(self, i: str, ip: str) -> float:
        """Units of product ``ip`` consumed per unit of product ``i``."""
        if i == ip:
            return 0.0
        return self.interdependency.get((i, ip), 0.0)

    def demand(self, node: NodeId, pid: str) -> float:
        key = (NodeId(*node), pid)
        if key not in self.demands:
            raise KeyError(f"no demand for product {pid!r} at node {key[0]}")
        return self.demands[key]

    def is_single_product(self) -> bool:
        return len(self.products) == 1

    def with_products(self, keep: List[str], label: str = "") -> "Instance":
        """Copy of the instance restricted to a subset of product ids."""
        keep_set = set(keep)
        return Instance(
            tree=self.tree,
            products=[p for p in self.products if p.id in keep_set],
            interdependency={
                k: v for k, v in self.interdependency.items() if set(k) <= keep_set
            },
            demands={k: v for k, v in self.demands.items() if k[1] in keep_set},
            budget_limit=self.budget_limit,
            interest_rate=self.interest_rate,
            label=label or self.label,
        )


def truncate_instance(instance: Instance, num_stages: int) -> Instance:
    """Restriction of an instance to its first ``num_stages`` stages."""
    from .scenario_tree import truncate

    tree = truncate(instance.tree, num_stages)
    return Instance(
        tree=tree,
        products=instance.products,
        interdependency=dict(instance.interdependency),
        demands={
            (node, pid): d
            for (node, pid), d in instance.demands.items()
            if node.stage <= num_stages
        },
        budget_limit=instance.budget_limit,
        interest_rate=instance.interest_rate,
        label=f"{instance.label}[T={num_stages}]" if instance.label else "",
    )


def discount_factor(instance: Instance, stage: int) -> float:
    """Discount factor 1/(1+rate)^(stage-1); equals 1 at stage 1 and when rate=0."""
    if not 1 <= stage <= instance.tree.num_stages:
        raise StageOutOfRange(
            f"stage {stage} outside 1..{instance.tree.num_stages}"
        )
    return 1.0 / (1.0 + instance.interest_rate) ** (stage - 1)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    where: str
    message: str

    def is_error(self) -> bool:
        return self.severity == "error"


def _scale_rule_deviation(small: TechnologyOption, large: TechnologyOption) -> float:
    """Relative deviation of a catalog pair from the economies-of-scale rule.

    Under the rule, the capacity ratio equals the cost ratio raised to 3/2.
    Returns |B_ratio - C_ratio^(3/2)| / B_ratio.
    """
    b_ratio = large.capacity / small.capacity
    c_ratio = (large.install_cost / small.install_cost) ** 1.5
    return abs(b_ratio - c_ratio) / b_ratio


def validate(instance: Instance) -> List[Diagnostic]:
    """Check every type invariant; never raises.

    Violations are error-level diagnostics. Deviations from the 2/3
    economies-of-scale rule are warnings only: real catalogs merely
    approximate it.
    """
    out: List[Diagnostic] = []
    err = lambda where, msg: out.append(Diagnostic("error", where, msg))
    warn = lambda where, msg: out.append(Diagnostic("warning", where, msg))

    ids = instance.product_ids()
    if not ids:
        err("products", "instance defines no products")
    if len(set(ids)) != len(ids):
        err("products", "duplicate product ids")

    for p in instance.products:
        where = f"product {p.id}"
        if not p.catalog:
            warn(where, "empty technology catalog: nothing can be installed")
        for k, tech in enumerate(p.catalog):
            if tech.capacity <= 0:
                err(where, f"catalog entry {k}: capacity must be > 0")
            if tech.install_cost <= 0:
                err(where, f"catalog entry {k}: install cost must be > 0")
        for name, value in [
            ("storage_cost", p.storage_cost),
            ("waste_cost", p.waste_cost),
            ("operating_cost", p.operating_cost),
            ("selling_price", p.selling_price),
        ]:
            if value < 0:
                err(where, f"{name} must be >= 0, got {value}")
        if p.capacity_limit <= 0:
            err(where, f"capacity_limit must be > 0, got {p.capacity_limit}")
        if p.storage_limit < 0:
            err(where, f"storage_limit must be >= 0, got {p.storage_limit}")
        # The 2/3 rule is how catalogs are generated, not a feasibility
        # condition, so any spread is reported at warning level.
        ordered = sorted(p.catalog, key=lambda t: t.capacity)
        for a in range(len(ordered)):
            for b in range(a + 1, len(ordered)):
                dev = _scale_rule_deviation(ordered[a], ordered[b])
                if dev > 1e-12:
                    warn(
                        where,
                        f"capacities ({ordered[a].capacity:g}, "
                        f"{ordered[b].capacity:g}) deviate from the 2/3 "
                        f"scale rule by {dev:.2%}",
                    )

    for (i, ip), value in instance.interdependency.items():
        if i == ip and value != 0.0:
            err("alpha", f"alpha({i},{i}) must be 0, got {value}")
        elif value < 0:
            err("alpha", f"alpha({i},{ip}) must be >= 0, got {value}")
        if i not in ids or ip not in ids:
            err("alpha", f"alpha({i},{ip}) references unknown product")

    if not 0.0 <= instance.interest_rate <= 1.0:
        err("interest_rate", f"must lie in [0, 1], got {instance.interest_rate}")
    if instance.budget_limit is not None and instance.budget_limit < 0:
        err("budget_limit", f"must be >= 0, got {instance.budget_limit}")

    for node in instance.tree.nodes():
        for pid in ids:
            key = (node, pid)
            if key not in instance.demands:
                err("demands", f"missing demand for product {pid!r} at node {node}")
            elif instance.demands[key] < 0:
                err(
                    "demands",
                    f"demand for {pid!r} at node {node} is negative "
                    f"({instance.demands[key]})",
                )
    return out

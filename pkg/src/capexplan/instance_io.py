"""Instance and plan JSON files.

Instance schema (top level): ``tree`` {stages, branching, conditional_probs},
``products`` (catalog entries carry capacity and cost), ``alpha`` keyed
"producer->consumed", ``demands`` keyed "t,j" mapping product to value,
optional ``budget_limit`` and ``cases`` (named catalog subsets), and
``interest_rate``. Numbers mirror the case-study tables directly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional, Union

from .formulation import InvestmentPlan
from .instance import Instance, ProductSpec, TechnologyOption
from .scenario_tree import NodeId, build_tree


class InstanceFormatError(Exception):
    """Raised when an instance file cannot be interpreted."""


def instance_from_dict(data: dict) -> Instance:
    try:
        tree_spec = data["tree"]
        tree = build_tree(
            int(tree_spec["stages"]),
            tree_spec.get("branching", []),
            tree_spec.get("conditional_probs"),
        )
        products = []
        for p in data["products"]:
            catalog = tuple(
                TechnologyOption(float(t["capacity"]), float(t["cost"]))
                for t in p["catalog"]
            )
            products.append(
                ProductSpec(
                    id=str(p["id"]),
                    catalog=catalog,
                    storage_cost=float(p["storage_cost"]),
                    waste_cost=float(p["waste_cost"]),
                    operating_cost=float(p["operating_cost"]),
                    selling_price=float(p["selling_price"]),
                    capacity_limit=float(p["capacity_limit"]),
                    storage_limit=float(p["storage_limit"]),
                )
            )
        alpha = {}
        for key, value in (data.get("alpha") or {}).items():
            producer, _, consumed = key.partition("->")
            if not consumed:
                raise InstanceFormatError(
                    f"alpha key {key!r} must look like 'producer->consumed'"
                )
            alpha[(producer.strip(), consumed.strip())] = float(value)
        demands = {}
        for key, per_product in data["demands"].items():
            t_str, _, j_str = key.partition(",")
            node = NodeId(int(t_str), int(j_str))
            for pid, value in per_product.items():
                demands[(node, str(pid))] = float(value)
        budget = data.get("budget_limit")
        instance = Instance(
            tree=tree,
            products=products,
            interdependency=alpha,
            demands=demands,
            budget_limit=None if budget is None else float(budget),
            interest_rate=float(data.get("interest_rate", 0.0)),
            label=str(data.get("label", "")),
        )
        instance.cases = _parse_cases(data, instance)
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"bad instance data: {exc}") from exc
    return instance


def _parse_cases(data, instance) -> Dict[str, Dict[str, List[int]]]:
    """Optional named catalog subsets, e.g. {"case1": {"P": [2, 3]}}."""
    cases = {}
    for label, selection in (data.get("cases") or {}).items():
        parsed = {}
        for pid, indices in selection.items():
            catalog_len = len(instance.product(str(pid)).catalog)
            idx = [int(i) for i in indices]
            if any(i < 0 or i >= catalog_len for i in idx):
                raise InstanceFormatError(
                    f"case {label!r}: catalog index out of range for {pid!r}"
                )
            parsed[str(pid)] = idx
        cases[str(label)] = parsed
    return cases


def restrict_to_case(instance: Instance, case: str) -> Instance:
    """Instance whose catalogs keep only the case's technology choices."""
    if case not in instance.cases:
        raise InstanceFormatError(
            f"unknown case {case!r}; available: {sorted(instance.cases)}"
        )
    selection = instance.cases[case]
    products = []
    for p in instance.products:
        keep = selection.get(p.id)
        catalog = (
            tuple(p.catalog[i] for i in keep) if keep is not None else p.catalog
        )
        products.append(
            ProductSpec(
                id=p.id,
                catalog=catalog,
                storage_cost=p.storage_cost,
                waste_cost=p.waste_cost,
                operating_cost=p.operating_cost,
                selling_price=p.selling_price,
                capacity_limit=p.capacity_limit,
                storage_limit=p.storage_limit,
            )
        )
    return Instance(
        tree=instance.tree,
        products=products,
        interdependency=dict(instance.interdependency),
        demands=dict(instance.demands),
        budget_limit=instance.budget_limit,
        interest_rate=instance.interest_rate,
        label=f"{instance.label}:{case}" if instance.label else case,
    )


def case_labels(instance: Instance) -> List[str]:
    return sorted(instance.cases or {})


def instance_to_dict(instance: Instance) -> dict:
    tree = instance.tree
    branching = []
    conditionals = []
    for t in range(1, tree.num_stages):
        per_parent = tree.nodes_per_stage[t] // tree.nodes_per_stage[t - 1]
        branching.append(per_parent)
        conditionals.append(
            [tree.conditional[NodeId(t + 1, j)] for j in range(1, tree.nodes_per_stage[t] + 1)]
        )
    data = {
        "label": instance.label,
        "tree": {
            "stages": tree.num_stages,
            "branching": branching,
            "conditional_probs": conditionals,
        },
        "products": [
            {
                "id": p.id,
                "catalog": [
                    {"capacity": t.capacity, "cost": t.install_cost}
                    for t in p.catalog
                ],
                "storage_cost": p.storage_cost,
                "waste_cost": p.waste_cost,
                "operating_cost": p.operating_cost,
                "selling_price": p.selling_price,
                "capacity_limit": p.capacity_limit,
                "storage_limit": p.storage_limit,
            }
            for p in instance.products
        ],
        "alpha": {
            f"{i}->{ip}": v for (i, ip), v in sorted(instance.interdependency.items())
        },
        "demands": {
            f"{node.stage},{node.scenario}": {
                pid: instance.demands[node, pid] for pid in instance.product_ids()
            }
            for node in instance.tree.nodes()
        },
        "interest_rate": instance.interest_rate,
    }
    if instance.budget_limit is not None:
        data["budget_limit"] = instance.budget_limit
    if instance.cases:
        data["cases"] = instance.cases
    return data


def load_instance(path: Union[str, Path]) -> Instance:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)


def save_instance(instance: Instance, path: Union[str, Path]) -> None:
    with open(path, "w") as handle:
        json.dump(instance_to_dict(instance), handle, indent=2, sort_keys=True)
        handle.write("\n")


def save_plan(plan: InvestmentPlan, path: Union[str, Path]) -> None:
    with open(path, "w") as handle:
        json.dump(plan.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_plan(path: Union[str, Path]) -> InvestmentPlan:
    with open(path) as handle:
        return InvestmentPlan.from_dict(json.load(handle))


def bundled_instance_path(name: str) -> Path:
    """Path of one of the instances shipped with the package."""
    root = Path(__file__).parent / "data" / "instances"
    path = root / f"{name}.json"
    if not path.exists():
        known = sorted(p.stem for p in root.glob("*.json"))
        raise InstanceFormatError(f"no bundled instance {name!r}; have {known}")
    return path


def load_bundled_instance(name: str) -> Instance:
    return load_instance(bundled_instance_path(name))

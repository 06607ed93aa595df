"""Shared instance factories for the test suite."""

import numpy as np

from capexplan.instance import Instance, ProductSpec, TechnologyOption
from capexplan.scenario_tree import build_tree

TABLE1_CAPACITIES = [100, 500, 1000, 1500]
TABLE1_COSTS = [247, 721, 1145, 1500]


def single_product_stochastic(
    demands,
    catalog_idx=(0, 1, 2, 3),
    gamma=0.0,
    budget=2000.0,
    branching=(2, 2),
):
    """Single-product study data on a 3-stage tree; demands in node order."""
    tree = build_tree(len(branching) + 1, list(branching))
    catalog = tuple(
        TechnologyOption(TABLE1_CAPACITIES[i], TABLE1_COSTS[i]) for i in catalog_idx
    )
    product = ProductSpec(
        id="prod",
        catalog=catalog,
        storage_cost=30,
        waste_cost=30,
        operating_cost=50,
        selling_price=140,
        capacity_limit=1500,
        storage_limit=400,
    )
    demand_map = {
        (node, "prod"): float(v) for node, v in zip(tree.nodes(), demands)
    }
    return Instance(
        tree=tree,
        products=[product],
        demands=demand_map,
        budget_limit=budget,
        interest_rate=gamma,
    )


def deterministic_example(
    demands=(100, 150, 200),
    capacities=(50, 100),
    costs=(126, 200),
    gamma=0.0,
    storage_cost=0.0,
):
    """Linear-horizon toy mirroring the two-technology walkthrough.

    Free storage keeps excess product flowing forward, so leftover product
    is disposed of at the end of the horizon rather than where it appears.
    """
    tree = build_tree(len(demands), [1] * (len(demands) - 1))
    product = ProductSpec(
        id="prod",
        catalog=tuple(TechnologyOption(b, c) for b, c in zip(capacities, costs)),
        storage_cost=storage_cost,
        waste_cost=30,
        operating_cost=50,
        selling_price=140,
        capacity_limit=400,
        storage_limit=100,
    )
    demand_map = {
        (node, "prod"): float(v) for node, v in zip(tree.nodes(), demands)
    }
    return Instance(
        tree=tree, products=[product], demands=demand_map, interest_rate=gamma
    )


def random_small_instance(rng, max_products=2):
    """Tiny random instance whose exhaustive enumeration stays cheap."""
    stages = int(rng.integers(2, 4))
    branching = [int(rng.integers(1, 3)) for _ in range(stages - 1)]
    tree = build_tree(stages, branching)
    n_products = int(rng.integers(1, max_products + 1))
    products = []
    for i in range(n_products):
        n_tech = 1 if n_products == 2 else int(rng.integers(1, 3))
        caps = sorted(rng.choice([2, 3, 4, 5], n_tech, replace=False))
        catalog = [
            TechnologyOption(int(c), float(int(rng.integers(1, 6)) * c)) for c in caps
        ]
        products.append(
            ProductSpec(
                id=f"P{i}",
                catalog=tuple(catalog),
                storage_cost=float(rng.integers(0, 3)),
                waste_cost=float(rng.integers(0, 3)),
                operating_cost=float(rng.integers(0, 4)),
                selling_price=float(rng.integers(0, 12)),
                capacity_limit=float(rng.integers(4, 10)),
                storage_limit=float(rng.integers(0, 3)),
            )
        )
    alpha = {}
    if n_products == 2 and rng.random() < 0.6:
        alpha[("P1", "P0")] = float(rng.integers(1, 3))
    demands = {
        (node, p.id): float(rng.integers(0, 9))
        for node in tree.nodes()
        for p in products
    }
    budget = float(rng.integers(5, 60)) if rng.random() < 0.5 else None
    return Instance(
        tree=tree,
        products=products,
        interdependency=alpha,
        demands=demands,
        budget_limit=budget,
        interest_rate=float(rng.choice([0.0, 0.06, 0.1])),
    )

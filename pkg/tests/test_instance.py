import pytest

from capexplan.instance import (
    Instance,
    ProductSpec,
    StageOutOfRange,
    TechnologyOption,
    discount_factor,
    truncate_instance,
    validate,
)
from capexplan.scenario_tree import NodeId, build_tree


def single_product_instance(gamma=0.06, catalog=None):
    tree = build_tree(3, [1, 1])
    catalog = catalog or (
        TechnologyOption(100, 247),
        TechnologyOption(500, 721),
        TechnologyOption(1000, 1145),
        TechnologyOption(1500, 1500),
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
    demands = {(node, "prod"): 100.0 * node.stage for node in tree.nodes()}
    return Instance(
        tree=tree,
        products=[product],
        demands=demands,
        budget_limit=2000,
        interest_rate=gamma,
    )


def test_discount_factor_values():
    inst = single_product_instance(gamma=0.06)
    assert discount_factor(inst, 1) == 1.0
    assert discount_factor(inst, 2) == pytest.approx(1 / 1.06)
    assert discount_factor(inst, 3) == pytest.approx(1 / 1.06**2)


def test_discount_factor_zero_rate_is_one():
    inst = single_product_instance(gamma=0.0)
    assert all(discount_factor(inst, t) == 1.0 for t in (1, 2, 3))


def test_discount_factor_monotone_when_positive():
    inst = single_product_instance(gamma=0.1)
    factors = [discount_factor(inst, t) for t in (1, 2, 3)]
    assert factors[0] > factors[1] > factors[2]


def test_discount_factor_stage_out_of_range():
    inst = single_product_instance()
    with pytest.raises(StageOutOfRange):
        discount_factor(inst, 0)
    with pytest.raises(StageOutOfRange):
        discount_factor(inst, 4)


def test_validate_clean_instance_warns_only_on_scale_rule():
    inst = single_product_instance()
    diagnostics = validate(inst)
    assert not any(d.is_error() for d in diagnostics)
    # the published catalog only approximates the 2/3 rule
    assert any("2/3" in d.message for d in diagnostics)


def test_scale_rule_deviation_small_for_table_catalog():
    # capacities 100 vs 500: ratio 5; (721/247)^1.5 = 4.988 -> under 1%
    inst = single_product_instance()
    warnings = [d for d in validate(inst) if "(100, 500)" in d.message]
    assert len(warnings) == 1
    pct = float(warnings[0].message.split("by ")[1].rstrip("%"))
    assert pct < 1.0


def test_validate_is_pure():
    inst = single_product_instance()
    assert validate(inst) == validate(inst)


def test_nonzero_alpha_diagonal_is_error():
    inst = single_product_instance()
    inst.interdependency[("prod", "prod")] = 0.5
    assert any(
        d.is_error() and "alpha" in d.where for d in validate(inst)
    )


def test_negative_demand_is_error():
    inst = single_product_instance()
    inst.demands[(NodeId(2, 1), "prod")] = -5.0
    assert any(d.is_error() and "demands" in d.where for d in validate(inst))


def test_missing_demand_is_error():
    inst = single_product_instance()
    del inst.demands[(NodeId(3, 1), "prod")]
    assert any("missing demand" in d.message for d in validate(inst))


def test_truncate_instance():
    inst = single_product_instance()
    sub = truncate_instance(inst, 2)
    assert sub.tree.num_stages == 2
    assert all(node.stage <= 2 for node, _ in sub.demands)
    assert sub.budget_limit == inst.budget_limit

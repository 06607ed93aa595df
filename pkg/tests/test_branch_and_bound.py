import math

import numpy as np
import pytest

from capexplan.milp import MilpModel, ModelError, SolveOptions, Status, solve_milp

from lp_oracles import lattice_enumeration_milp


def knapsack_model():
    model = MilpModel(sense="maximize")
    for name, value in (("x1", 5.0), ("x2", 4.0), ("x3", 3.0)):
        model.add_variable(name, 0, 1, integer=True, objective=value)
    model.add_constraint("cap", {"x1": 2.0, "x2": 3.0, "x3": 1.0}, "<=", 5.0)
    return model


def test_small_integer_program():
    model = MilpModel(sense="maximize")
    model.add_variable("a", 0, 3, integer=True, objective=3.0)
    model.add_variable("b", 0, 10, integer=True, objective=2.0)
    model.add_constraint("cap", {"a": 1.0, "b": 1.0}, "<=", 4.0)
    sol = solve_milp(model, gap_tol=1e-9)
    assert sol.status == Status.OPTIMAL
    assert sol.objective == pytest.approx(11.0)
    assert sol.values["a"] == pytest.approx(3.0, abs=1e-6)
    assert sol.values["b"] == pytest.approx(1.0, abs=1e-6)


def test_knapsack():
    # frozen from enumerating all 8 binary points: best is x1+x2 (weight 5)
    rows = [(np.array([2.0, 3.0, 1.0]), "<=", 5.0)]
    ref_obj, ref_x = lattice_enumeration_milp(
        np.array([5.0, 4.0, 3.0]), rows, [(0, 1)] * 3, maximize=True
    )
    assert ref_obj == pytest.approx(9.0)
    sol = solve_milp(knapsack_model(), gap_tol=1e-9)
    assert sol.objective == pytest.approx(ref_obj)


def test_lp_integral_instance_solves_at_root():
    # totally unimodular (assignment-like) constraints: relaxation integral
    model = MilpModel(sense="maximize")
    for i in range(3):
        for j in range(3):
            model.add_variable(f"x{i}{j}", 0, 1, integer=True, objective=float(i + j))
    for i in range(3):
        model.add_constraint(
            f"row{i}", {f"x{i}{j}": 1.0 for j in range(3)}, "<=", 1.0
        )
        model.add_constraint(
            f"col{i}", {f"x{j}{i}": 1.0 for j in range(3)}, "<=", 1.0
        )
    sol = solve_milp(model, gap_tol=1e-9)
    assert sol.status == Status.OPTIMAL
    assert sol.node_count == 1
    assert sol.objective == pytest.approx(6.0)  # diagonal-free assignment 2+2+2


def test_infeasible_milp():
    model = MilpModel(sense="maximize")
    model.add_variable("x", 0, 5, integer=True, objective=1.0)
    model.add_constraint("a", {"x": 2.0}, "==", 3.0)  # no integer solution
    sol = solve_milp(model, gap_tol=1e-9)
    assert sol.status == Status.INFEASIBLE


def test_integer_variables_need_finite_bounds():
    model = MilpModel(sense="maximize")
    model.add_variable("x", 0, integer=True, objective=1.0)
    with pytest.raises(ModelError):
        solve_milp(model)


def test_time_limit_without_incumbent_returns_empty():
    model = knapsack_model()
    sol = solve_milp(model, time_limit=0.0)
    assert sol.status == Status.TIME_LIMIT
    assert sol.values == {}


def test_returned_integers_are_integral():
    sol = solve_milp(knapsack_model(), gap_tol=1e-9)
    for name in ("x1", "x2", "x3"):
        value = sol.values[name]
        assert abs(value - round(value)) <= 1e-6


def test_determinism_same_nodes_and_values():
    first = solve_milp(knapsack_model(), gap_tol=1e-9)
    second = solve_milp(knapsack_model(), gap_tol=1e-9)
    assert first.node_count == second.node_count
    assert first.values == second.values
    assert first.objective == second.objective


def test_weak_duality_audit_on_log_events():
    events = []
    model = knapsack_model()
    options = SolveOptions(gap_tol=1e-9, log=events.append)
    sol = solve_milp(model, options=options)
    assert sol.status == Status.OPTIMAL
    for event in events:
        if event["incumbent"] is None:
            continue
        # maximization: proven bound dominates any attained incumbent
        assert event["incumbent"] <= event["bound"] + 1e-6 * abs(event["bound"])


def test_parallel_nodes_reach_same_objective():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = 6
        model = MilpModel(sense="maximize")
        c = rng.integers(1, 9, n)
        w = rng.integers(1, 9, n)
        for j in range(n):
            model.add_variable(f"x{j}", 0, 3, integer=True, objective=float(c[j]))
        model.add_constraint(
            "cap", {f"x{j}": float(w[j]) for j in range(n)}, "<=", float(w.sum())
        )
        single = solve_milp(model, options=SolveOptions(gap_tol=1e-9, threads=1))
        multi = solve_milp(model, options=SolveOptions(gap_tol=1e-9, threads=4))
        assert single.objective == pytest.approx(multi.objective, abs=1e-9)


def test_random_milps_match_lattice_enumeration():
    """Random MILPs with <= 12 integer variables against full enumeration."""
    rng = np.random.default_rng(11)
    for trial in range(150):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, 7))
        a = np.round(rng.normal(0, 1.5, (m, n)), 2)
        senses = rng.choice(["<=", ">=", "=="], m, p=[0.6, 0.3, 0.1])
        b = np.round(rng.normal(2, 4, m), 2)
        c = np.round(rng.normal(0, 2, n), 2)
        bounds = [(0, int(rng.integers(1, 6))) for _ in range(n)]
        maximize = bool(rng.random() < 0.5)
        rows = [(a[i], str(senses[i]), float(b[i])) for i in range(m)]
        ref_obj, _ = lattice_enumeration_milp(c, rows, bounds, maximize=maximize)
        model = MilpModel(sense="maximize" if maximize else "minimize")
        for j in range(n):
            model.add_variable(
                f"x{j}", bounds[j][0], bounds[j][1], integer=True,
                objective=float(c[j]),
            )
        for i in range(m):
            model.add_constraint(
                f"r{i}", {f"x{j}": float(a[i, j]) for j in range(n)},
                str(senses[i]), float(b[i]),
            )
        sol = solve_milp(model, gap_tol=1e-9)
        if ref_obj is None:
            assert sol.status == Status.INFEASIBLE, f"trial {trial}"
        else:
            assert sol.status == Status.OPTIMAL, f"trial {trial}"
            assert sol.objective == pytest.approx(ref_obj, abs=1e-6, rel=1e-6), (
                f"trial {trial}"
            )

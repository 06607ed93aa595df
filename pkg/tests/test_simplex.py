import numpy as np
import pytest

from capexplan.milp import MilpModel, Status, solve_lp

from lp_oracles import vertex_enumeration_lp


def test_single_variable_bound():
    model = MilpModel(sense="maximize")
    model.add_variable("x", 0, objective=1.0)
    model.add_constraint("cap", {"x": 1.0}, "<=", 3.0)
    sol = solve_lp(model)
    assert sol.status == Status.OPTIMAL
    assert sol.objective == pytest.approx(3.0)


def test_infeasible_pair():
    model = MilpModel(sense="maximize")
    model.add_variable("x", 0, objective=1.0)
    model.add_constraint("lo", {"x": 1.0}, ">=", 2.0)
    model.add_constraint("hi", {"x": 1.0}, "<=", 1.0)
    assert solve_lp(model).status == Status.INFEASIBLE


def test_unbounded():
    model = MilpModel(sense="maximize")
    model.add_variable("x", 0, objective=1.0)
    model.add_variable("y", 0, objective=0.0)
    model.add_constraint("only_y", {"y": 1.0}, "<=", 5.0)
    assert solve_lp(model).status == Status.UNBOUNDED


def test_equality_and_free_variables():
    # min x + y s.t. x + y = 4, x - y >= -2, y free
    model = MilpModel(sense="minimize")
    model.add_variable("x", 0, objective=1.0)
    model.add_variable("y", float("-inf"), objective=1.0)
    model.add_constraint("sum", {"x": 1.0, "y": 1.0}, "==", 4.0)
    model.add_constraint("gap", {"x": 1.0, "y": -1.0}, ">=", -2.0)
    sol = solve_lp(model)
    assert sol.status == Status.OPTIMAL
    assert sol.objective == pytest.approx(4.0)
    assert sol.values["x"] + sol.values["y"] == pytest.approx(4.0)


def test_negative_bounds():
    model = MilpModel(sense="minimize")
    model.add_variable("x", -5, 5, objective=1.0)
    model.add_variable("y", -3, 8, objective=2.0)
    model.add_constraint("mix", {"x": 1.0, "y": 1.0}, ">=", -6.0)
    sol = solve_lp(model)
    assert sol.status == Status.OPTIMAL
    assert sol.objective == pytest.approx(-9.0)  # y=-3 first, then x=-3
    assert sol.values["y"] == pytest.approx(-3.0)


def test_degenerate_problem_terminates():
    # many redundant constraints intersecting at one vertex
    model = MilpModel(sense="maximize")
    model.add_variable("x", 0, objective=1.0)
    model.add_variable("y", 0, objective=1.0)
    for k in range(1, 8):
        model.add_constraint(f"c{k}", {"x": 1.0, "y": float(k)}, "<=", 1.0)
    sol = solve_lp(model)
    assert sol.status == Status.OPTIMAL
    assert sol.objective == pytest.approx(1.0)


def _random_lp(rng):
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 11 - n))  # rows plus boxes stay within 10
    a = rng.normal(0, 1, (m, n))
    b = rng.uniform(0.5, 5.0, m)  # origin feasible
    c = rng.normal(0, 2, n)
    box = rng.uniform(2.0, 10.0, n)  # keeps the polytope bounded
    return a, b, c, box


def test_random_dense_lps_match_vertex_enumeration():
    """500 random dense LPs against the basic-solution enumeration oracle."""
    rng = np.random.default_rng(20240211)
    for trial in range(500):
        a, b, c, box = _random_lp(rng)
        m, n = a.shape
        a_full = np.vstack([a, np.eye(n)])
        b_full = np.concatenate([b, box])
        ref_obj, _ = vertex_enumeration_lp(c, a_full, b_full, maximize=True)
        assert ref_obj is not None
        model = MilpModel(sense="maximize")
        for j in range(n):
            model.add_variable(f"x{j}", 0, objective=float(c[j]))
        for i in range(m):
            model.add_constraint(
                f"r{i}", {f"x{j}": float(a[i, j]) for j in range(n)}, "<=", float(b[i])
            )
        for j in range(n):
            model.add_constraint(f"box{j}", {f"x{j}": 1.0}, "<=", float(box[j]))
        sol = solve_lp(model)
        assert sol.status == Status.OPTIMAL, f"trial {trial}"
        assert sol.objective == pytest.approx(ref_obj, abs=1e-6, rel=1e-6), (
            f"trial {trial}: {sol.objective} vs oracle {ref_obj}"
        )


def test_mixed_sense_lps_match_reference():
    """General-form rows and bounds against scipy's independent LP solver."""
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = np.random.default_rng(7)
    for trial in range(150):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 9))
        a = np.round(rng.normal(0, 1, (m, n)), 3)
        senses = rng.choice(["<=", ">=", "=="], m, p=[0.5, 0.3, 0.2])
        b = np.round(rng.normal(0, 3, m), 3)
        c = np.round(rng.normal(0, 2, n), 3)
        lo = np.where(rng.random(n) < 0.25, -np.inf, np.round(rng.uniform(-3, 0, n), 3))
        hi = np.where(rng.random(n) < 0.15, np.inf, np.round(rng.uniform(0.5, 6, n), 3))
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for i in range(m):
            if senses[i] == "<=":
                a_ub.append(a[i]); b_ub.append(b[i])
            elif senses[i] == ">=":
                a_ub.append(-a[i]); b_ub.append(-b[i])
            else:
                a_eq.append(a[i]); b_eq.append(b[i])
        ref = linprog(
            c,
            A_ub=np.array(a_ub) if a_ub else None,
            b_ub=np.array(b_ub) if b_ub else None,
            A_eq=np.array(a_eq) if a_eq else None,
            b_eq=np.array(b_eq) if b_eq else None,
            bounds=list(zip(lo, hi)),
            method="highs",
        )
        model = MilpModel(sense="minimize")
        for j in range(n):
            model.add_variable(f"x{j}", float(lo[j]), float(hi[j]), objective=float(c[j]))
        for i in range(m):
            model.add_constraint(
                f"r{i}", {f"x{j}": float(a[i, j]) for j in range(n)},
                str(senses[i]), float(b[i]),
            )
        sol = solve_lp(model)
        if ref.status == 2:
            assert sol.status == Status.INFEASIBLE, f"trial {trial}"
        elif ref.status == 3:
            assert sol.status == Status.UNBOUNDED, f"trial {trial}"
        elif ref.status == 0:
            assert sol.status == Status.OPTIMAL, f"trial {trial}"
            assert sol.objective == pytest.approx(ref.fun, abs=1e-6, rel=1e-6)

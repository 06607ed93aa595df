"""Independent oracles used to validate the solver stack.

Kept free of any capexplan.milp imports beyond the model container, so the
checks stay on a separate route from the code under test: LPs are solved by
enumerating basic solutions, MILPs by enumerating the integer lattice.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def vertex_enumeration_lp(c, a_ub, b_ub, maximize=True):
    """Optimum of max/min c.x s.t. a_ub x <= b_ub, x >= 0 by vertex search.

    Enumerates every basic solution of the slack form [A | I] z = b and keeps
    the best feasible one. Assumes the feasible set is bounded (callers add
    box rows). Returns (objective, x) or (None, None) when infeasible.
    """
    a_ub = np.asarray(a_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = a_ub.shape
    full = np.hstack([a_ub, np.eye(m)])
    total = n + m
    best_obj, best_x = None, None
    combo_iter = itertools.combinations(range(total), m)
    while True:
        block = list(itertools.islice(combo_iter, 20000))
        if not block:
            break
        combos = np.array(block)
        mats = full[:, combos].transpose(1, 0, 2)  # block x m x m
        dets = np.abs(np.linalg.det(mats))
        for combo, mat, det in zip(combos, mats, dets):
            if det < 1e-10:
                continue
            sol = np.linalg.solve(mat, b_ub)
            if (sol < -1e-9).any():
                continue
            x = np.zeros(total)
            x[combo] = sol
            value = float(c @ x[:n])
            if (
                best_obj is None
                or (maximize and value > best_obj)
                or (not maximize and value < best_obj)
            ):
                best_obj, best_x = value, x[:n].copy()
    return best_obj, best_x


def lattice_enumeration_milp(c, rows, bounds, maximize=True):
    """Optimum of a pure-integer program by exhausting the bounded lattice.

    ``rows`` is a list of (coeffs, sense, rhs) with sense in {"<=", "==",
    ">="}; ``bounds`` a list of (lo, hi) integer ranges.
    """
    c = np.asarray(c, dtype=float)
    best_obj, best_x = None, None
    ranges = [range(int(lo), int(hi) + 1) for lo, hi in bounds]
    for point in itertools.product(*ranges):
        x = np.asarray(point, dtype=float)
        ok = True
        for coeffs, sense, rhs in rows:
            lhs = float(np.dot(coeffs, x))
            if sense == "<=" and lhs > rhs + 1e-9:
                ok = False
            elif sense == ">=" and lhs < rhs - 1e-9:
                ok = False
            elif sense == "==" and abs(lhs - rhs) > 1e-9:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        value = float(c @ x)
        if (
            best_obj is None
            or (maximize and value > best_obj)
            or (not maximize and value < best_obj)
        ):
            best_obj, best_x = value, x.copy()
    return best_obj, best_x

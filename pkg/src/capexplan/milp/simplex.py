"""Primal simplex for LP relaxations.

Revised bounded-variable primal simplex with a dense basis inverse and
sparse constraint storage. Every row gets a slack column (bounds encode the
sense), so the working system is A z = b with box bounds on z. Phase 1
starts from the all-slack basis and drives per-row artificials to zero;
phase 2 optimizes the true objective. Dantzig pricing switches to Bland's
rule after a run of degenerate pivots, and an absolute iteration cap turns
persistent stalling into :class:`NumericalFailure`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .model import (
    EQUAL,
    GREATER,
    LESS,
    CompiledProblem,
    MilpModel,
    NumericalFailure,
    Solution,
    SolveOptions,
    Status,
)

_PIVOT_TOL = 1e-9
_BLAND_AFTER = 100  # consecutive degenerate pivots before anti-cycling kicks in
_REFACTOR_EVERY = 120


@dataclass
class LpResult:
    status: Status
    x: np.ndarray  # structural variable values (min sense irrelevant)
    objective: float  # in ORIGINAL model sense
    iterations: int = 0


class LpEngine:
    """Reusable LP solver over one compiled problem.

    Bound arrays may be overridden per solve, which is what branch-and-bound
    does at every node; the sparse matrix work happens once here.
    """

    def __init__(self, prob: CompiledProblem, options: SolveOptions = None):
        self.prob = prob
        self.options = options or SolveOptions()
        m, n = prob.matrix.shape
        self.m, self.n = m, n
        # columns: [structural | slack | artificial]
        eye = sparse.identity(m, format="csc") if m else sparse.csc_matrix((0, 0))
        self.A = sparse.hstack([prob.matrix, eye, eye], format="csc") if m else prob.matrix.tocsc()
        self.AT = self.A.T.tocsr()
        self.total = n + 2 * m
        sign = -1.0 if prob.maximize else 1.0
        self.c = np.zeros(self.total)
        self.c[:n] = sign * prob.cost
        slack_lower = np.zeros(m)
        slack_upper = np.zeros(m)
        for i, s in enumerate(prob.senses):
            if s == LESS:
                slack_lower[i], slack_upper[i] = 0.0, math.inf
            elif s == GREATER:
                slack_lower[i], slack_upper[i] = -math.inf, 0.0
            else:
                slack_lower[i], slack_upper[i] = 0.0, 0.0
        self.slack_lower, self.slack_upper = slack_lower, slack_upper
        self.b = prob.rhs
        scale = 1.0 + (float(np.abs(self.c).max()) if self.total else 0.0)
        self.dual_tol = self.options.feasibility_tol * scale
        self.feas_tol = self.options.feasibility_tol * (
            1.0 + (float(np.abs(self.b).max()) if m else 0.0)
        )
        self.iteration_cap = max(20000, 60 * (m + n))

    def solve(self, lower=None, upper=None) -> LpResult:
        """Solve with optional structural-bound overrides (length-n arrays)."""
        prob = self.prob
        n, m = self.n, self.m
        lo = np.asarray(lower, dtype=float) if lower is not None else prob.lower
        up = np.asarray(upper, dtype=float) if upper is not None else prob.upper
        sign = -1.0 if prob.maximize else 1.0
        if prob.infeasible or np.any(lo > up + 1e-9):
            return LpResult(Status.INFEASIBLE, np.zeros(n), math.nan)
        if m == 0:
            return self._solve_boxed(lo, up, sign)
        state = _SimplexState(self, lo, up)
        status, iters = state.run()
        if status != Status.OPTIMAL:
            return LpResult(status, np.zeros(n), math.nan, iters)
        x = state.z[:n].copy()
        return LpResult(Status.OPTIMAL, x, sign * float(self.c[:n] @ x), iters)

    def _solve_boxed(self, lo, up, sign):
        """No rows left after presolve: each variable sits at its best bound."""
        x = np.zeros(self.n)
        c = sign * self.prob.cost
        for j in range(self.n):
            if c[j] > 0:
                best = lo[j]
            elif c[j] < 0:
                best = up[j]
            else:
                best = lo[j] if math.isfinite(lo[j]) else min(up[j], 0.0)
                best = best if math.isfinite(best) else 0.0
            if not math.isfinite(best):
                return LpResult(Status.UNBOUNDED, x, math.nan)
            x[j] = best
        return LpResult(Status.OPTIMAL, x, float(self.prob.cost @ x))


class _SimplexState:
    """One solve: basis bookkeeping, pricing, ratio test, pivots."""

    def __init__(self, engine: LpEngine, lo, up):
        self.e = engine
        m, n, total = engine.m, engine.n, engine.total
        self.m, self.n, self.total = m, n, total
        self.lower = np.concatenate([lo, engine.slack_lower, np.zeros(m)])
        self.upper = np.concatenate([up, engine.slack_upper, np.zeros(m)])
        self.z = np.zeros(total)
        self.iterations = 0

        # park structural variables at their nearest finite bound
        for j in range(n):
            if math.isfinite(self.lower[j]):
                self.z[j] = self.lower[j]
            elif math.isfinite(self.upper[j]):
                self.z[j] = self.upper[j]
        resid = engine.b - engine.prob.matrix @ self.z[:n]

        # all-slack start: rows whose residual violates the slack bounds get
        # an artificial carrying the excess instead
        self.basis = np.empty(m, dtype=int)
        self.in_basis = np.zeros(total, dtype=bool)
        self.phase1_cost = np.zeros(total)
        art_active = False
        for i in range(m):
            sl, su = engine.slack_lower[i], engine.slack_upper[i]
            s_col, a_col = n + i, n + m + i
            if sl - 1e-12 <= resid[i] <= su + 1e-12:
                self.basis[i] = s_col
                self.z[s_col] = resid[i]
            else:
                clamped = sl if resid[i] < sl else su
                self.z[s_col] = clamped
                excess = resid[i] - clamped
                if excess >= 0:
                    self.lower[a_col], self.upper[a_col] = 0.0, math.inf
                    self.phase1_cost[a_col] = 1.0
                else:
                    self.lower[a_col], self.upper[a_col] = -math.inf, 0.0
                    self.phase1_cost[a_col] = -1.0
                self.z[a_col] = excess
                self.basis[i] = a_col
                art_active = True
        self.in_basis[self.basis] = True
        self.binv = np.eye(m)
        self.x_b = self.z[self.basis].copy()
        self.bland = False
        self.degenerate_run = 0
        self.need_artificial_phase = art_active

    # -- driver -------------------------------------------------------------

    def run(self):
        if self.need_artificial_phase:
            status = self._optimize(self.phase1_cost, phase=1)
            if status != Status.OPTIMAL:
                raise NumericalFailure("phase 1 terminated abnormally")
            infeas = float(self.phase1_cost @ self.z)
            if infeas > 10 * self.e.feas_tol:
                return Status.INFEASIBLE, self.iterations
            self._retire_artificials()
        status = self._optimize(self.e.c, phase=2)
        return status, self.iterations

    def _retire_artificials(self):
        """Fix artificials at zero; pivot basic ones out where possible."""
        m, n = self.m, self.n
        art0 = n + m
        for col in range(art0, self.total):
            self.lower[col] = self.upper[col] = 0.0
            if not self.in_basis[col]:
                self.z[col] = 0.0
        for r in range(m):
            col = self.basis[r]
            if col < art0:
                continue
            row_vals = self.e.AT @ self.binv[r, :]  # e_r' B^-1 A over all columns
            candidates = np.where(
                (~self.in_basis)
                & (np.arange(self.total) < art0)
                & (np.abs(row_vals) > 1e-7)
            )[0]
            if candidates.size:
                self._pivot(int(candidates[0]), r, delta=0.0, sigma=1.0)
            # otherwise the row is redundant; the artificial stays basic,
            # pinned to zero by its bounds

    # -- core loop ----------------------------------------------------------

    def _optimize(self, cost, phase):
        e = self.e
        while True:
            self.iterations += 1
            if self.iterations > e.iteration_cap:
                raise NumericalFailure(
                    f"simplex iteration cap {e.iteration_cap} exceeded "
                    f"(phase {phase})"
                )
            if self.iterations % _REFACTOR_EVERY == 0:
                self._refactor()

            y = self.binv.T @ cost[self.basis]
            d = cost - e.AT @ y
            movable = (~self.in_basis) & (self.upper > self.lower)
            at_lower = movable & (self.z <= self.lower + 1e-12)
            at_upper = movable & (self.z >= self.upper - 1e-12)
            free = movable & ~at_lower & ~at_upper
            can_up = (at_lower | free) & (d < -e.dual_tol)
            can_down = (at_upper | free) & (d > e.dual_tol)
            eligible = can_up | can_down
            if not eligible.any():
                return Status.OPTIMAL

            if self.bland:
                enter = int(np.flatnonzero(eligible)[0])
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                enter = int(np.argmax(score))
            sigma = 1.0 if can_up[enter] else -1.0

            w = self.binv @ _dense_col(e.A, enter, self.m)
            t = sigma * w
            delta, leave_row = self._ratio_test(enter, t)
            if delta is None:
                if phase == 1:
                    raise NumericalFailure("phase-1 objective unbounded")
                return Status.UNBOUNDED

            if math.isfinite(delta) and delta > 1e-12:
                self.degenerate_run = 0
                self.bland = False
            else:
                self.degenerate_run += 1
                if self.degenerate_run >= _BLAND_AFTER:
                    self.bland = True

            if leave_row is None:
                # bound flip: entering variable runs to its other bound
                self.x_b -= delta * t
                self.z[self.basis] = self.x_b
                self.z[enter] += sigma * delta
            else:
                self._pivot(enter, leave_row, delta, sigma, t=t)

    def _ratio_test(self, enter, t):
        m = self.m
        lb = self.lower[self.basis]
        ub = self.upper[self.basis]
        ratios = np.full(m, math.inf)
        pos = t > _PIVOT_TOL
        neg = t < -_PIVOT_TOL
        with np.errstate(invalid="ignore"):
            ratios[pos] = (self.x_b[pos] - lb[pos]) / t[pos]
            ratios[neg] = (self.x_b[neg] - ub[neg]) / t[neg]
        ratios[np.isnan(ratios)] = math.inf  # inf - inf on free basics
        np.maximum(ratios, 0.0, out=ratios)
        self_cap = self.upper[enter] - self.lower[enter]
        best = float(ratios.min()) if m else math.inf
        if not math.isfinite(best) and not math.isfinite(self_cap):
            return None, None
        if self_cap <= best:
            return self_cap, None
        ties = np.flatnonzero(ratios <= best + 1e-9 * (1.0 + abs(best)))
        if self.bland:
            leave = int(ties[np.argmin(self.basis[ties])])
        else:
            leave = int(ties[np.argmax(np.abs(t[ties]))])
        return best, leave

    def _pivot(self, enter, row, delta, sigma, t=None):
        if t is None:
            w = self.binv @ _dense_col(self.e.A, enter, self.m)
            t = sigma * w
        if abs(t[row]) < _PIVOT_TOL:
            raise NumericalFailure("pivot element vanished")
        leaving = self.basis[row]
        self.x_b -= delta * t
        entering_value = self.z[enter] + sigma * delta
        # the leaving variable exits at whichever bound blocked the step
        target = self.lower[leaving] if t[row] > 0 else self.upper[leaving]
        self.z[leaving] = target if math.isfinite(target) else 0.0
        self.in_basis[leaving] = False
        self.basis[row] = enter
        self.in_basis[enter] = True
        self.x_b[row] = entering_value
        self.z[enter] = entering_value
        w = sigma * t
        pivot_row = self.binv[row, :] / w[row]
        self.binv -= np.outer(w, pivot_row)
        self.binv[row, :] = pivot_row
        self.z[self.basis] = self.x_b

    def _refactor(self):
        basis_matrix = _dense_cols(self.e.A, self.basis, self.m)
        try:
            self.binv = np.linalg.inv(basis_matrix)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis during refactorization") from exc
        z_nb = self.z.copy()
        z_nb[self.basis] = 0.0
        self.x_b = self.binv @ (self.e.b - self.e.A @ z_nb)
        self.z[self.basis] = self.x_b


def _dense_col(a, j, m):
    col = np.zeros(m)
    start, end = a.indptr[j], a.indptr[j + 1]
    col[a.indices[start:end]] = a.data[start:end]
    return col


def _dense_cols(a, cols, m):
    out = np.zeros((m, len(cols)))
    for k, j in enumerate(cols):
        start, end = a.indptr[j], a.indptr[j + 1]
        out[a.indices[start:end], k] = a.data[start:end]
    return out


def solve_lp(model: MilpModel, options: SolveOptions = None) -> Solution:
    """Solve the LP relaxation of ``model`` (integrality flags ignored)."""
    options = options or SolveOptions()
    prob = model.compile()
    engine = LpEngine(prob, options)
    res = engine.solve()
    if res.status != Status.OPTIMAL:
        return Solution(status=res.status, iterations=res.iterations)
    values = {name: float(v) for name, v in zip(prob.names, res.x)}
    return Solution(
        status=Status.OPTIMAL,
        values=values,
        objective=res.objective,
        bound=res.objective,
        relative_gap=0.0,
        iterations=res.iterations,
    )

"""Branch-and-bound over the simplex LP relaxation.

Branching picks the most-fractional integer variable (ties by lowest
variable index); node selection is best dual bound first (ties FIFO).
With a single worker the search is fully deterministic: identical models
and settings revisit identical nodes. With ``threads > 1`` the best open
nodes are relaxed concurrently in waves; the returned objective is the
same, node counts may differ.
"""

from __future__ import annotations

import heapq
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .model import (
    MilpModel,
    ModelError,
    Solution,
    SolveOptions,
    Status,
    relative_gap,
)
from .simplex import LpEngine

_PRUNE_REL = 1e-9


def solve_milp(
    model: MilpModel,
    gap_tol: Optional[float] = None,
    time_limit: Optional[float] = None,
    options: Optional[SolveOptions] = None,
) -> Solution:
    """Solve to proven optimality within ``gap_tol`` or until a limit hits.

    ``Optimal`` means the incumbent's relative gap to the best open bound is
    at most ``gap_tol``. ``TimeLimit``/``GapLimit`` carry the incumbent and
    bound found so far; a ``TimeLimit`` result may have no values at all if
    no feasible point was found in time.
    """
    options = options or SolveOptions()
    if gap_tol is not None:
        options.gap_tol = gap_tol
    if time_limit is not None:
        options.time_limit = time_limit

    start = time.monotonic()
    prob = model.compile()
    bad = prob.integer & ~(np.isfinite(prob.lower) & np.isfinite(prob.upper))
    if bad.any():
        name = prob.names[int(np.flatnonzero(bad)[0])]
        raise ModelError(f"integer variable {name!r} needs finite bounds for B&B")

    engine = LpEngine(prob, options)
    sign = -1.0 if prob.maximize else 1.0
    int_idx = np.flatnonzero(prob.integer)
    int_tol = options.integrality_tol
    out_of_time = lambda: (
        options.time_limit is not None
        and time.monotonic() - start > options.time_limit
    )

    root = engine.solve()
    node_count = 1
    if root.status == Status.INFEASIBLE:
        return Solution(Status.INFEASIBLE, runtime=time.monotonic() - start, node_count=1)
    if root.status == Status.UNBOUNDED:
        return Solution(Status.UNBOUNDED, runtime=time.monotonic() - start, node_count=1)

    incumbent_x = None
    incumbent_obj = math.inf  # min sense
    counter = 0
    # heap entries: (min-sense bound inherited from the parent LP, tiebreak,
    # lower bounds, upper bounds, LP result or None)
    heap = [(sign * root.objective, counter, prob.lower.copy(), prob.upper.copy(), root)]

    def log_event(kind, best_bound):
        if options.log is not None:
            # the proven bound can never be worse than an attained incumbent
            best_bound = min(best_bound, incumbent_obj)
            options.log(
                {
                    "event": kind,
                    "nodes": node_count,
                    "incumbent": None if incumbent_x is None else sign * incumbent_obj,
                    "bound": sign * best_bound,
                }
            )

    def finish(status, best_bound):
        best_bound = min(best_bound, incumbent_obj)
        gap = (
            relative_gap(incumbent_obj, best_bound)
            if incumbent_x is not None
            else math.inf
        )
        if incumbent_x is None:
            values = {}
            objective = math.nan
        else:
            values = {n: float(v) for n, v in zip(prob.names, incumbent_x)}
            objective = sign * incumbent_obj
        return Solution(
            status=status,
            values=values,
            objective=objective,
            bound=sign * best_bound,
            relative_gap=gap,
            node_count=node_count,
            iterations=0,
            runtime=time.monotonic() - start,
        )

    pool = ThreadPoolExecutor(max_workers=options.threads) if options.threads > 1 else None
    try:
        while heap:
            best_bound = heap[0][0]
            if incumbent_x is not None:
                if relative_gap(incumbent_obj, best_bound) <= options.gap_tol:
                    return finish(Status.OPTIMAL, best_bound)
                if best_bound >= incumbent_obj - _PRUNE_REL * max(1.0, abs(incumbent_obj)):
                    return finish(Status.OPTIMAL, incumbent_obj)
            if out_of_time():
                return finish(Status.TIME_LIMIT, best_bound)
            if options.node_limit is not None and node_count >= options.node_limit:
                return finish(
                    Status.GAP_LIMIT if incumbent_x is not None else Status.TIME_LIMIT,
                    best_bound,
                )

            batch = []
            take = options.threads if pool is not None else 1
            while heap and len(batch) < take:
                batch.append(heapq.heappop(heap))
            unsolved = [entry for entry in batch if entry[4] is None]
            if pool is not None and len(unsolved) > 1:
                results = pool.map(lambda e: engine.solve(e[2], e[3]), unsolved)
                solved = dict(zip((id(e) for e in unsolved), results))
            else:
                solved = {id(e): engine.solve(e[2], e[3]) for e in unsolved}

            for entry in batch:
                bound, _, lower, upper, res = entry
                if res is None:
                    res = solved[id(entry)]
                    node_count += 1
                if res.status == Status.INFEASIBLE:
                    continue
                if res.status == Status.UNBOUNDED:
                    return finish(Status.UNBOUNDED, -math.inf)
                obj = sign * res.objective
                if obj >= incumbent_obj - _PRUNE_REL * max(1.0, abs(incumbent_obj)):
                    continue
                x, frac_j = res.x, -1
                if int_idx.size:
                    # distance to the nearest integer; argmax takes the
                    # lowest variable index on ties
                    frac = np.abs(x[int_idx] - np.round(x[int_idx]))
                    pos = int(np.argmax(frac))
                    if frac[pos] > int_tol:
                        frac_j = int(int_idx[pos])
                if frac_j < 0:
                    incumbent_x = x.copy()
                    incumbent_obj = obj
                    log_event("incumbent", min(bound, obj))
                    continue
                value = x[frac_j]
                down_upper = upper.copy()
                down_upper[frac_j] = math.floor(value)
                up_lower = lower.copy()
                up_lower[frac_j] = math.ceil(value)
                counter += 1
                heapq.heappush(heap, (obj, counter, lower, down_upper, None))
                counter += 1
                heapq.heappush(heap, (obj, counter, up_lower, upper, None))
                log_event("node", heap[0][0] if heap else obj)
    finally:
        if pool is not None:
            pool.shutdown(wait=False, cancel_futures=True)

    if incumbent_x is None:
        return finish(Status.INFEASIBLE, math.inf)
    return finish(Status.OPTIMAL, incumbent_obj)

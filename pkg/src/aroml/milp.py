"""Branch-and-bound over binary variables on top of the dense simplex.

Best-bound node selection, branching on the most fractional binary
(ties broken by lowest index), no cuts or rounding heuristics. Node
budget overruns raise ResourceBudgetError carrying the incumbent.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, ModelInfeasibleError, ResourceBudgetError
from .lp import (INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, LpSolution,
                 solve_lp, solve_lp_reduced)

DEFAULT_GAP = 1e-4     # mirrors the default MIP gap used throughout
RELAXED_GAP = 5e-3     # the loose gap used for the large-scale runs
INT_TOL = 1e-6


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray = None
    duals: np.ndarray = None
    objective: float = None
    bound: float = None
    nodes: int = 0


@dataclass
class MixedBinaryProgram:
    lp: LinearProgram
    binaries: np.ndarray

    def __post_init__(self):
        self.binaries = np.asarray(self.binaries, dtype=int)
        n = self.lp.n_vars
        if self.binaries.size and (self.binaries.min() < 0 or self.binaries.max() >= n):
            raise InputError("binary index out of range")
        for j in self.binaries:
            if self.lp.lo[j] < -INT_TOL or self.lp.hi[j] > 1 + INT_TOL:
                raise InputError(f"binary variable {j} must have bounds within [0, 1]")


def solve_milp(p, gap=DEFAULT_GAP, node_budget=200_000):
    """Best-bound branch and bound; relative gap <= max(gap, 1e-9)."""
    if gap < 0:
        raise InputError("gap must be nonnegative")
    gap = max(gap, 1e-9)
    bins = p.binaries

    def relax(lo, hi):
        lp = replace(p.lp, lo=lo, hi=hi)
        return solve_lp_reduced(lp)

    root_lo = p.lp.lo.copy()
    root_hi = p.lp.hi.copy()
    incumbent = None
    inc_obj = np.inf
    nodes = 0
    counter = 0
    heap = [(-np.inf, 0, root_lo, root_hi)]

    def rel_gap(ub, lb):
        return (ub - lb) / max(1.0, abs(ub))

    global_lb = -np.inf
    while heap:
        lb_node, _, lo, hi = heapq.heappop(heap)
        global_lb = lb_node if np.isfinite(lb_node) else global_lb
        if incumbent is not None and rel_gap(inc_obj, lb_node) <= gap:
            break
        nodes += 1
        if nodes > node_budget:
            raise ResourceBudgetError(
                f"node budget {node_budget} exceeded",
                incumbent=_finish(incumbent, inc_obj, lb_node, nodes))
        sol = relax(lo, hi)
        if sol.status == INFEASIBLE:
            continue
        if sol.status == UNBOUNDED:
            if incumbent is None and nodes == 1:
                return MilpSolution(status=UNBOUNDED, nodes=nodes)
            continue
        if incumbent is not None and rel_gap(inc_obj, sol.objective) <= gap:
            continue
        frac = np.abs(sol.x[bins] - np.round(sol.x[bins])) if bins.size else np.array([])
        if frac.size == 0 or frac.max() <= INT_TOL:
            x = sol.x.copy()
            if bins.size:
                x[bins] = np.round(x[bins])
            if sol.objective < inc_obj - 1e-12:
                inc_obj = sol.objective
                incumbent = MilpSolution(status=OPTIMAL, x=x, duals=sol.duals,
                                         objective=sol.objective)
            continue
        j = bins[int(np.argmax(frac))]
        for fixed in (0.0, 1.0):
            lo2, hi2 = lo.copy(), hi.copy()
            lo2[j] = hi2[j] = fixed
            counter += 1
            heapq.heappush(heap, (sol.objective, counter, lo2, hi2))

    if incumbent is None:
        raise ModelInfeasibleError("no feasible binary assignment exists")
    lb = min(inc_obj, heap[0][0]) if heap else inc_obj
    return _finish(incumbent, inc_obj, lb, nodes)


def _finish(incumbent, inc_obj, lb, nodes):
    if incumbent is None:
        return None
    out = incumbent
    out.bound = lb
    out.nodes = nodes
    return out

"""Column-and-constraint generation with an alternating-direction inner step.

solve_ccg drives the outer loop: a restricted master MILP over (x, alpha,
{y_d}) built from the pooled worst-case scenarios gives the lower bound,
and evaluate_q approximates the worst-case objective of the candidate x
(upper bound) by alternating between an LP over the dual multipliers pi and
an LP over the uncertainty set.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConsistencyError, InputError, ModelInfeasibleError,
                     ResourceBudgetError, SolverStallError)
from .lp import (EQ, FEAS_TOL, INFEASIBLE, LE, OPTIMAL, UNBOUNDED,
                 LinearProgram, extract_duals, solve_lp, solve_lp_reduced)
from .milp import DEFAULT_GAP, MixedBinaryProgram, solve_milp
from .model import build_det, sample_polyhedron

log = logging.getLogger(__name__)

MAX_ALTERNATIONS = 500
POOL_ROUND = 9  # decimals for pool deduplication


@dataclass
class CcgConfig:
    eps1: float = 1e-3
    eps2: float = 1e-3
    n_starts: int = 3
    max_outer_iters: int = 100
    initial_x: np.ndarray = None
    mip_gap: float = DEFAULT_GAP
    node_budget: int = 200_000

    def __post_init__(self):
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise InputError("tolerances must be positive")
        if self.n_starts < 1:
            raise InputError("n_starts must be at least 1")


@dataclass
class CcgResult:
    x: np.ndarray
    d: np.ndarray
    objective: float     # final UB (or the master bound when tighter)
    lower_bound: float
    iterations: int
    pool: list


@dataclass
class QDetail:
    """Per-start diagnostics of one evaluate_q call."""

    q: float
    d: np.ndarray
    best_start: int
    lb_sequences: list = field(default_factory=list)  # one list per start


def _dual_step_explicit(p, theta, x, d):
    """Step (a) over the multiplier polyhedron T directly."""
    B = p.B_map(theta=theta)
    r = p.A_map(d, theta) @ x - p.g_map(d, theta)
    lp = LinearProgram(c=-r, A=-B.T, senses=[EQ] * p.n_y,
                       rhs=p.b_map(theta=theta), lo=np.zeros(p.m))
    sol = solve_lp(lp)
    if sol.status == UNBOUNDED:
        return np.inf, None
    if sol.status == INFEASIBLE:
        raise ConsistencyError(
            "dual multiplier set is empty: recourse cost unbounded below")
    return -sol.objective + p.first_stage_cost(theta, x, d), sol.x


def _dual_step(p, theta, x, d):
    """Step (a): max over pi in T of pi.(A(d)x - g(d)) + c(d).x + w(d).

    Returns (value, pi); value is +inf (pi None) when the maximum is
    unbounded, i.e. the recourse problem is infeasible under scenario d.
    By strong duality this equals the recourse LP, which is much smaller
    than the multiplier LP, so solve that and read pi off its duals;
    fall back to the explicit form when the restored multipliers fail the
    T-membership residual (possible only if a variable bound is not
    covered by a row, which the problem contract forbids).
    """
    lp = build_det(p, theta, x, d)
    sol = solve_lp_reduced(lp)
    if sol.status == INFEASIBLE:
        return np.inf, None
    if sol.status == UNBOUNDED:
        raise ConsistencyError(
            "dual multiplier set is empty: recourse cost unbounded below")
    pi = extract_duals(lp, sol)
    b = p.b_map(theta=theta)
    resid = np.abs(lp.A.T @ pi + b).max(initial=0.0)
    if resid > FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
        return _dual_step_explicit(p, theta, x, d)
    return sol.objective + p.first_stage_cost(theta, x, d), pi


def _scenario_step(p, theta, unc, x, pi):
    """Step (b): max over d in D of pi.(A(d)x - g(d)) + c(d).x + w(d)."""
    zero = np.zeros(p.n_d)
    grad = np.zeros(p.n_d)
    if p.A_map.d_coef is not None:
        grad += np.einsum("i,ijk,j->k", pi, p.A_map.d_coef, x)
    if p.g_map.d_coef is not None:
        grad -= pi @ p.g_map.d_coef
    if p.c_map.d_coef is not None:
        grad += x @ p.c_map.d_coef
    if p.w_map.d_coef is not None:
        grad += p.w_map.d_coef
    const = float(pi @ (p.A_map(zero, theta) @ x - p.g_map(zero, theta))) \
        + p.first_stage_cost(theta, x, zero)

    dim = unc.n_d + unc.n_aux
    c = np.zeros(dim)
    c[:unc.n_d] = -grad
    lo = np.concatenate([unc.lo, unc.aux_lo]) if unc.n_aux else unc.lo
    hi = np.concatenate([unc.hi, unc.aux_hi]) if unc.n_aux else unc.hi
    lp = LinearProgram(c=c, A=unc.H, senses=[LE] * unc.H.shape[0],
                       rhs=unc.h, lo=lo, hi=hi)
    sol = solve_lp(lp)
    if sol.status != OPTIMAL:
        raise ConsistencyError("scenario LP failed on a certified set")
    d = sol.x[:unc.n_d]
    return -sol.objective + const, d


def evaluate_q(p, theta, unc, x, cfg, rng, detail=False):
    """Alternating-direction estimate of Q(x) = max_d min_y (Eq. value).

    Runs cfg.n_starts starts from scenarios sampled out of D, returns the
    best (largest) Q-tilde and the final scenario of that start. Infinite
    value with a witness scenario means the recourse is infeasible.
    """
    x = np.asarray(x, dtype=float)
    best_q, best_d, best_start = -np.inf, None, -1
    sequences = []
    for s in range(cfg.n_starts):
        d = sample_polyhedron(unc, rng)
        ub, lb = np.inf, -np.inf
        seq = []
        t = 0
        while ub - lb > cfg.eps2 * max(1.0, abs(ub) if np.isfinite(ub) else 1.0):
            if t >= MAX_ALTERNATIONS:
                raise SolverStallError(
                    f"alternating direction stalled (start {s}, alternation {t})")
            try:
                lb, pi = _dual_step(p, theta, x, d)
            except SolverStallError as e:
                raise SolverStallError(
                    f"start {s}, alternation {t}, step (a): {e}") from e
            if not np.isfinite(lb):
                out = QDetail(q=np.inf, d=d, best_start=s,
                              lb_sequences=sequences + [seq + [np.inf]])
                return out if detail else (np.inf, d)
            seq.append(lb)
            try:
                ub, d = _scenario_step(p, theta, unc, x, pi)
            except SolverStallError as e:
                raise SolverStallError(
                    f"start {s}, alternation {t}, step (b): {e}") from e
            t += 1
        sequences.append(seq)
        q = (ub + lb) / 2.0 if np.isfinite(ub) else lb
        if q > best_q + 1e-12:
            best_q, best_d, best_start = q, d, s
    out = QDetail(q=best_q, d=best_d, best_start=best_start,
                  lb_sequences=sequences)
    return out if detail else (best_q, best_d)


def build_master(p, theta, pool):
    """Restricted master MILP over (x, alpha, {y_d : d in pool}).

    Variable layout: x (n_x binaries), alpha, then one y block per pooled
    scenario in order. Constraint rows: per scenario, the epigraph row then
    the recourse block; d-independent rows touching only x are emitted once.
    """
    if not pool:
        raise InputError("master needs at least one pooled scenario")
    n_x, n_y, m = p.n_x, p.n_y, p.m
    K = len(pool)
    nv = n_x + 1 + K * n_y
    AL = n_x  # alpha column

    B = p.B_map(theta=theta)
    b = p.b_map(theta=theta)
    w_zero = B.max(axis=1, initial=-np.inf) == 0.0
    w_zero &= B.min(axis=1, initial=np.inf) == 0.0
    d_free = np.ones(m, dtype=bool)
    if p.A_map.d_coef is not None:
        d_free &= np.all(p.A_map.d_coef == 0.0, axis=(1, 2))
    if p.g_map.d_coef is not None:
        d_free &= np.all(p.g_map.d_coef == 0.0, axis=1)
    shared = w_zero & d_free  # x-only rows identical across scenario blocks

    rows, rhs = [], []
    for k, d in enumerate(pool):
        d = np.asarray(d, dtype=float)
        A = p.A_map(d, theta)
        g = p.g_map(d, theta)
        c = p.c_map(d, theta)
        w = float(p.w_map(d, theta))
        y0 = n_x + 1 + k * n_y
        # epigraph: c.x + w + b.y - alpha <= 0
        r = np.zeros(nv)
        r[:n_x] = c
        r[AL] = -1.0
        r[y0:y0 + n_y] = b
        rows.append(r)
        rhs.append(-w)
        for i in range(m):
            if shared[i] and k > 0:
                continue
            r = np.zeros(nv)
            r[:n_x] = A[i]
            r[y0:y0 + n_y] = B[i]
            rows.append(r)
            rhs.append(g[i])

    lo = np.concatenate([np.zeros(n_x), [-np.inf], np.tile(p.y_lo, K)])
    hi = np.concatenate([np.ones(n_x), [np.inf], np.tile(p.y_hi, K)])
    obj = np.zeros(nv)
    obj[AL] = 1.0
    lp = LinearProgram(c=obj, A=np.array(rows), senses=[LE] * len(rows),
                       rhs=np.array(rhs), lo=lo, hi=hi)
    return MixedBinaryProgram(lp=lp, binaries=np.arange(n_x))


def _default_x0(p, theta, unc, cfg):
    """Deterministic warm start: solve the single-scenario problem at the
    max-slack center of D."""
    dc = unc.max_slack_center()
    mb = build_master(p, theta, [dc])
    sol = solve_milp(mb, gap=cfg.mip_gap, node_budget=cfg.node_budget)
    return np.round(sol.x[:p.n_x])


def _dedup_add(pool, d):
    key = np.round(np.asarray(d, dtype=float), POOL_ROUND)
    for q in pool:
        if np.array_equal(np.round(q, POOL_ROUND), key):
            return False
    pool.append(np.asarray(d, dtype=float).copy())
    return True


def solve_ccg(p, theta, unc, cfg=None, rng=None, trace_path=None):
    """Algorithm: alternate master solves (lower bound) with worst-case
    evaluations (upper bound) until the relative gap closes below eps1."""
    cfg = cfg or CcgConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    trace = open(trace_path, "w") if trace_path else None

    def emit(i, lb, ub, pool, x):
        if trace:
            trace.write(json.dumps({
                "iter": i, "LB": None if not np.isfinite(lb) else lb,
                "UB": None if not np.isfinite(ub) else ub,
                "pool_size": len(pool), "x_i": list(map(float, x))}) + "\n")

    try:
        if cfg.initial_x is not None:
            x = np.asarray(cfg.initial_x, dtype=float)
            if x.shape != (p.n_x,):
                raise InputError("initial_x has the wrong length")
        else:
            x = _default_x0(p, theta, unc, cfg)
        pool = []
        ub, lb = np.inf, -np.inf
        q, d = evaluate_q(p, theta, unc, x, cfg, rng)
        _dedup_add(pool, d)
        emit(0, lb, q, pool, x)
        i = 1
        while True:
            if i > cfg.max_outer_iters:
                inc = CcgResult(x=x, d=np.asarray(d), objective=ub,
                                lower_bound=lb, iterations=i - 1, pool=list(pool))
                raise ResourceBudgetError(
                    f"outer iteration cap {cfg.max_outer_iters} reached",
                    incumbent=inc)
            master = build_master(p, theta, pool)
            msol = solve_milp(master, gap=cfg.mip_gap,
                              node_budget=cfg.node_budget)
            x = np.round(msol.x[:p.n_x])
            lb = msol.x[p.n_x]  # alpha
            q, d = evaluate_q(p, theta, unc, x, cfg, rng)
            ub = q
            _dedup_add(pool, d)
            emit(i, lb, ub, pool, x)
            log.debug("ccg iter %d: LB=%.6g UB=%.6g pool=%d", i, lb, ub,
                      len(pool))
            if np.isfinite(ub) and ub - lb <= cfg.eps1 * max(1.0, abs(ub)):
                # the alternating-direction UB can dip below the master
                # bound when every start lands in the same local maximum;
                # the master value is exact over the pool, so it is the
                # tighter estimate in that case
                return CcgResult(x=x, d=np.asarray(d),
                                 objective=max(ub, lb),
                                 lower_bound=lb, iterations=i,
                                 pool=list(pool))
            i += 1
    except ModelInfeasibleError:
        raise ModelInfeasibleError(
            "no here-and-now decision is robust feasible") from None
    finally:
        if trace:
            trace.close()

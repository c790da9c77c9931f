"""Dense two-phase simplex for linear programs in row (inequality) form.

Solves  min c.x  s.t.  A_i . x {<=,==,>=} rhs_i,  lo <= x <= hi,
returning the primal point, one dual multiplier per declared row, and a
status flag. Equality rows are handled as two inequalities internally.

Dual sign convention (minimization): multipliers of "<=" rows are <= 0,
multipliers of ">=" rows are >= 0, equality rows are free. The dual
objective reported in the solution satisfies strong duality against the
primal objective at optimality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, InputError, SolverStallError, StateError

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
DUALITY_TOL = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, EQ, GE = "<=", "==", ">="


@dataclass
class LinearProgram:
    """min c.x subject to row constraints and variable bounds."""

    c: np.ndarray
    A: np.ndarray
    senses: list
    rhs: np.ndarray
    lo: np.ndarray = None
    hi: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.senses = list(self.senses)
        n = self.c.shape[0]
        if self.A.size == 0:
            self.A = self.A.reshape(0, n)
        m = self.A.shape[0]
        if self.lo is None:
            self.lo = np.full(n, -np.inf)
        if self.hi is None:
            self.hi = np.full(n, np.inf)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.A.shape[1] != n:
            raise InputError(f"A has {self.A.shape[1]} columns, objective has {n}")
        if self.rhs.shape[0] != m or len(self.senses) != m:
            raise InputError("row count mismatch between A, senses and rhs")
        if self.lo.shape[0] != n or self.hi.shape[0] != n:
            raise InputError("bound vectors must match the variable count")
        if np.any(self.lo > self.hi):
            raise InputError("lower bound exceeds upper bound")
        for s in self.senses:
            if s not in (LE, EQ, GE):
                raise InputError(f"unknown row sense {s!r}")

    @property
    def n_vars(self):
        return self.c.shape[0]

    @property
    def n_rows(self):
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = None
    duals: np.ndarray = None
    objective: float = None
    dual_objective: float = None
    ray: np.ndarray = None
    iterations: int = 0


def _standardize(lp):
    """Rewrite the LP over shifted nonnegative variables with <= rows only.

    Returns (c_u, A_rows, b_rows, transform) where x = offset + S.u and
    transform carries everything needed to map points, rays and duals back.
    """
    n = lp.n_vars
    cols = []          # (var index, sign) per u-column
    offset = np.zeros(n)
    extra_bound_rows = []  # (u-column, ub) for finite [lo, hi] ranges
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    N = len(cols)
    S = np.zeros((n, N))
    for k, (j, s) in enumerate(cols):
        S[j, k] = s

    A_u = lp.A @ S
    b_shift = lp.rhs - lp.A @ offset
    rows = []
    brow = []
    row_of = []   # original row index, or -1 for a bound row
    row_sign = []  # +1 if the internal row keeps the original orientation
    for i in range(lp.n_rows):
        s = lp.senses[i]
        if s in (LE, EQ):
            rows.append(A_u[i])
            brow.append(b_shift[i])
            row_of.append(i)
            row_sign.append(1.0)
        if s in (GE, EQ):
            rows.append(-A_u[i])
            brow.append(-b_shift[i])
            row_of.append(i)
            row_sign.append(-1.0)
    for k, ub in extra_bound_rows:
        r = np.zeros(N)
        r[k] = 1.0
        rows.append(r)
        brow.append(ub)
        row_of.append(-1)
        row_sign.append(1.0)

    A_rows = np.array(rows, dtype=float).reshape(len(rows), N)
    b_rows = np.array(brow, dtype=float)
    c_u = lp.c @ S
    transform = {
        "S": S,
        "offset": offset,
        "row_of": np.array(row_of),
        "row_sign": np.array(row_sign),
        "obj_const": float(lp.c @ offset),
    }
    return c_u, A_rows, b_rows, transform


def solve_lp(lp, max_iters=None):
    """Two-phase dense simplex. Dantzig rule with a seeded random-edge
    fallback on degenerate plateaus; deterministic for fixed inputs."""
    c_u, A, b, tr = _standardize(lp)
    M, N = A.shape
    if max_iters is None:
        max_iters = 20000 + 60 * (M + N)

    neg = b < 0
    A = np.where(neg[:, None], -A, A)
    b = np.abs(b) * 1.0
    b[b == 0.0] = 0.0
    slack_sign = np.where(neg, -1.0, 1.0)
    art_rows = np.flatnonzero(neg)
    n_art = art_rows.size

    # tableau columns: u (N), slacks (M), artificials (n_art), rhs
    ncols = N + M + n_art
    T = np.zeros((M + 2, ncols + 1))
    T[:M, :N] = A
    T[:M, N:N + M] = np.diag(slack_sign)
    for k, r in enumerate(art_rows):
        T[r, N + M + k] = 1.0
    T[:M, -1] = b

    basis = np.empty(M, dtype=int)
    basis[:] = np.arange(N, N + M)
    for k, r in enumerate(art_rows):
        basis[r] = N + M + k

    Z2, Z1 = M, M + 1  # phase-2 and phase-1 cost rows
    T[Z2, :N] = c_u
    if n_art:
        T[Z1] = -T[art_rows].sum(axis=0)
        T[Z1, N + M:ncols] = 0.0

    allowed = np.ones(ncols, dtype=bool)
    iters = 0

    def pivot(r, j):
        nonlocal T
        col = T[:, j].copy()
        T[r] /= col[r]
        col[r] = 0.0
        T -= np.outer(col, T[r])
        basis[r] = j

    rng = np.random.default_rng(0)

    def run_phase(zrow):
        nonlocal iters
        randomized = False
        stall = 0
        best = np.inf
        stall_cap = min(100, 2 * (M + N))
        while True:
            z = T[zrow, :ncols]
            cand = np.flatnonzero(allowed & (z < -PIVOT_TOL))
            if cand.size == 0:
                return None
            if randomized:
                # degenerate plateau: a random entering column escapes
                # cycles with probability one, where Dantzig can loop
                j = cand[rng.integers(cand.size)]
            else:
                j = cand[np.argmin(z[cand])]
            col = T[:M, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return j  # unbounded direction
            ratios = T[rows, -1] / col[rows]
            rmin = ratios.min()
            ties = rows[ratios <= rmin + PIVOT_TOL * (1.0 + abs(rmin))]
            # among tied ratios take the largest pivot element: small
            # pivots are what compound roundoff in a dense tableau
            r = ties[np.argmax(col[ties])]
            pivot(r, j)
            iters += 1
            if iters > max_iters:
                raise SolverStallError(
                    f"simplex exceeded {max_iters} pivots ({M} rows, {N} cols)")
            obj = -T[zrow, -1]
            if not np.isfinite(best) or obj < best - 1e-12 * (1.0 + abs(best)):
                best = obj
                stall = 0
                randomized = False
            else:
                stall += 1
                if stall > stall_cap:
                    randomized = True

    if n_art:
        ub = run_phase(Z1)
        if ub is not None:
            raise ConsistencyError("phase-1 objective unbounded")
        if -T[Z1, -1] > FEAS_TOL * (1.0 + float(np.abs(b).max(initial=0.0))):
            return LpSolution(status=INFEASIBLE, iterations=iters)
        allowed[N + M:] = False
        for r in np.flatnonzero(basis >= N + M):
            row = T[r, :N + M]
            nz = np.flatnonzero(allowed[:N + M] & (np.abs(row) > PIVOT_TOL))
            if nz.size:
                pivot(r, nz[0])
                iters += 1
            # else: redundant zero row; harmless to leave basic at level 0

    ub = run_phase(Z2)
    if ub is not None:
        # build the certifying ray in original variable space
        j = ub
        ray_u = np.zeros(N + M + n_art)
        ray_u[j] = 1.0
        ray_u[basis] = -T[:M, j]
        r_x = tr["S"] @ ray_u[:N]
        return LpSolution(status=UNBOUNDED, ray=r_x, iterations=iters)

    # recover primal point
    u = np.zeros(ncols)
    u[basis] = T[:M, -1]
    x = tr["offset"] + tr["S"] @ u[:N]
    obj = float(lp.c @ x)

    # internal duals from slack reduced costs; negations cancel by construction
    mu = -T[Z2, N:N + M]
    duals = np.zeros(lp.n_rows)
    row_of, row_sign = tr["row_of"], tr["row_sign"]
    for i in range(M):
        oi = row_of[i]
        if oi >= 0:
            duals[oi] += row_sign[i] * mu[i]
    b_internal = np.where(neg, -b, b)
    dual_obj = float(mu @ b_internal) + tr["obj_const"]
    return LpSolution(status=OPTIMAL, x=x, duals=duals, objective=obj,
                      dual_objective=dual_obj, iterations=iters)


def presolve_to_bounds(lp):
    """Fold single-variable rows into variable bounds.

    Returns (reduced_lp, info) where info lets restore_duals map multipliers
    of the reduced LP back to the full row set; reduced_lp is None when the
    folding itself proves infeasibility. Only "<=" rows are folded; the
    variable set is unchanged.
    """
    lo = lp.lo.copy()
    hi = lp.hi.copy()
    keep = []
    lo_owner = np.full(lp.n_vars, -1)   # row index defining the final lo
    hi_owner = np.full(lp.n_vars, -1)
    lo_beta = np.ones(lp.n_vars)
    hi_beta = np.ones(lp.n_vars)
    infeasible = False
    for i in range(lp.n_rows):
        row = lp.A[i]
        nz = np.flatnonzero(row)
        if lp.senses[i] != LE or nz.size > 1:
            keep.append(i)
            continue
        if nz.size == 0:
            if lp.rhs[i] < -FEAS_TOL:
                infeasible = True
            continue
        j = nz[0]
        beta = row[j]
        bound = lp.rhs[i] / beta
        if beta > 0:
            if bound <= hi[j]:
                hi[j], hi_owner[j], hi_beta[j] = bound, i, beta
        else:
            if bound >= lo[j]:
                lo[j], lo_owner[j], lo_beta[j] = bound, i, beta
    if np.any(lo > hi + FEAS_TOL * (1.0 + np.abs(hi))):
        infeasible = True
    info = {"keep": np.array(keep, dtype=int), "n_rows": lp.n_rows,
            "lo_owner": lo_owner, "hi_owner": hi_owner,
            "lo_beta": lo_beta, "hi_beta": hi_beta}
    if infeasible:
        return None, info
    red = LinearProgram(c=lp.c, A=lp.A[info["keep"]],
                        senses=[lp.senses[i] for i in keep],
                        rhs=lp.rhs[info["keep"]],
                        lo=np.minimum(lo, hi), hi=hi)
    return red, info


def restore_duals(lp, red, info, sol):
    """Full-row multipliers for a presolved solve.

    Kept rows take their multipliers directly; folded rows receive the bound
    multiplier of the variable they constrain, recovered from the
    stationarity residual c - A'duals (supported on active bounds).
    """
    duals = np.zeros(info["n_rows"])
    duals[info["keep"]] = sol.duals
    rho = lp.c - (lp.A[info["keep"]].T @ sol.duals
                  if info["keep"].size else 0.0)
    for j in np.flatnonzero(np.abs(rho) > FEAS_TOL):
        owner = info["lo_owner"][j] if rho[j] > 0 else info["hi_owner"][j]
        beta = info["lo_beta"][j] if rho[j] > 0 else info["hi_beta"][j]
        if owner >= 0:
            duals[owner] += rho[j] / beta
    return duals


def solve_lp_reduced(lp, max_iters=None):
    """solve_lp behind presolve_to_bounds; duals cover the original rows.

    The residual-based dual restoration assigns bound multipliers to folded
    rows, so B'pi stationarity holds over the full row set whenever every
    active variable bound is represented by some folded row (true by the
    AroProblem redundancy contract).
    """
    red, info = presolve_to_bounds(lp)
    if red is None:
        return LpSolution(status=INFEASIBLE)
    sol = solve_lp(red, max_iters=max_iters)
    if sol.status != OPTIMAL:
        return sol
    return LpSolution(status=OPTIMAL, x=sol.x,
                      duals=restore_duals(lp, red, info, sol),
                      objective=sol.objective,
                      dual_objective=sol.dual_objective,
                      iterations=sol.iterations)


def extract_duals(lp, solution):
    """Multipliers normalized to be >= 0 on binding inequality rows.

    For an all-"<=" recourse LP  min b.y s.t. By <= g  this returns pi with
    B'pi = -b and pi >= 0 (strong duality: obj = -pi.g).
    """
    if solution.status != OPTIMAL:
        raise StateError("duals are only defined for an optimal solution")
    pi = np.empty(lp.n_rows)
    for i, s in enumerate(lp.senses):
        pi[i] = -solution.duals[i] if s == LE else solution.duals[i]
    return pi


def primal_infeasibility(lp, x):
    """Worst constraint/bound violation of x (0 means feasible)."""
    worst = 0.0
    if lp.n_rows:
        r = lp.A @ x - lp.rhs
        for i, s in enumerate(lp.senses):
            if s == LE:
                worst = max(worst, r[i])
            elif s == GE:
                worst = max(worst, -r[i])
            else:
                worst = max(worst, abs(r[i]))
    worst = max(worst, float(np.max(lp.lo - x, initial=0.0)))
    worst = max(worst, float(np.max(x - lp.hi, initial=0.0)))
    return worst

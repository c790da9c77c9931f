"""Independent brute-force reference implementations used by the tests.

Everything here is deliberately naive (enumeration-based) so that it cannot
share bugs with the production solvers: LPs are checked by enumerating basic
solutions, MILPs by enumerating binary assignments, and the robust value by
enumerating uncertainty-set vertices.
"""

from __future__ import annotations

import itertools

import numpy as np

from aroml.lp import EQ, GE, LE


def _rows_as_le(c, A, senses, rhs):
    """Rewrite to <=-only rows (equalities become a pair)."""
    rows, b = [], []
    for i, s in enumerate(senses):
        if s in (LE, EQ):
            rows.append(A[i])
            b.append(rhs[i])
        if s in (GE, EQ):
            rows.append(-A[i])
            b.append(-rhs[i])
    return np.array(rows).reshape(len(rows), A.shape[1]), np.array(b)


def lp_brute_force(c, A, senses, rhs, lo, hi, tol=1e-7):
    """Solve min c.x over the polyhedron by enumerating candidate vertices.

    Stacks constraint rows and finite bound rows, then tries every subset of
    size n as a potentially tight basis. Returns (status, value, best_x) with
    status in {"optimal", "infeasible", "unbounded"}. Unboundedness is
    detected separately by enumerating extreme rays of the recession cone via
    the same mechanism one dimension down; for the small test problems a
    simpler certificate is enough: if no vertex exists the caller should not
    rely on this oracle.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    G, gb = _rows_as_le(c, np.atleast_2d(A).reshape(len(senses), n), senses,
                        np.asarray(rhs, dtype=float))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo[j]):
            G = np.vstack([G, -e])
            gb = np.append(gb, -lo[j])
        if np.isfinite(hi[j]):
            G = np.vstack([G, e])
            gb = np.append(gb, hi[j])

    best_val, best_x, feasible = np.inf, None, False
    m = G.shape[0]
    for idx in itertools.combinations(range(m), n):
        M = G[list(idx)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, gb[list(idx)])
        if np.all(G @ x <= gb + tol * (1.0 + np.abs(gb))):
            feasible = True
            v = float(c @ x)
            if v < best_val - 1e-12:
                best_val, best_x = v, x
    if not feasible:
        # the set may still be nonempty without vertices; check a few rays
        return "infeasible", None, None

    # unboundedness: is there a recession direction r with G r <= 0, c.r < 0?
    # enumerate directions spanned by nullspaces of row subsets of size n-1
    for idx in itertools.combinations(range(m), max(n - 1, 0)):
        M = G[list(idx)] if idx else np.zeros((0, n))
        _, s, vt = np.linalg.svd(np.vstack([M, np.zeros((1, n))]))
        for k in range(n):
            if k < len(s) and s[k] > 1e-10:
                continue
            r = vt[k]
            for sign in (1.0, -1.0):
                d = sign * r
                if float(c @ d) < -1e-9 and np.all(G @ d <= 1e-9):
                    return "unbounded", None, None
    return "optimal", best_val, best_x


def milp_brute_force(c, A, senses, rhs, lo, hi, binaries):
    """Enumerate all binary assignments; solve the continuous rest via
    lp_brute_force. Returns (status, value, best_x)."""
    c = np.asarray(c, dtype=float)
    binaries = list(binaries)
    best_val, best_x = np.inf, None
    for bits in itertools.product([0.0, 1.0], repeat=len(binaries)):
        lo2 = np.array(lo, dtype=float)
        hi2 = np.array(hi, dtype=float)
        for j, v in zip(binaries, bits):
            lo2[j] = hi2[j] = v
        status, val, x = lp_brute_force(c, A, senses, rhs, lo2, hi2)
        if status == "unbounded":
            return "unbounded", None, None
        if status == "optimal" and val < best_val - 1e-12:
            best_val, best_x = val, x
    if best_x is None:
        return "infeasible", None, None
    return "optimal", best_val, best_x


def enumerate_vertices(H, h, lo, hi, tol=1e-7):
    """All vertices of {d | H d <= h, lo <= d <= hi} by basis enumeration."""
    n = len(lo)
    G, gb = np.atleast_2d(np.asarray(H, dtype=float)).reshape(-1, n), list(np.asarray(h, dtype=float))
    G = list(G)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo[j]):
            G.append(-e)
            gb.append(-lo[j])
        if np.isfinite(hi[j]):
            G.append(e)
            gb.append(hi[j])
    G = np.array(G)
    gb = np.array(gb)
    verts = []
    for idx in itertools.combinations(range(G.shape[0]), n):
        M = G[list(idx)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        v = np.linalg.solve(M, gb[list(idx)])
        if np.all(G @ v <= gb + tol * (1.0 + np.abs(gb))):
            if not any(np.allclose(v, w, atol=1e-7) for w in verts):
                verts.append(v)
    return verts


def robust_value_brute_force(problem, theta, unc, x):
    """Q(x) = max over uncertainty-set vertices of Det(theta, x, d).

    Valid because the inner max of an LP value function over a polytope is
    attained at a vertex. Lifted sets are enumerated in d-space using the
    sampler hint to reconstruct the budget rows.
    """
    from aroml.model import det_value

    H, h = unc.H, unc.h
    if unc.n_aux:
        hint = unc.sampler_hint
        assert hint and hint["kind"] == "l1_ball"
        center = np.array(hint["center"], dtype=float)
        scale = np.array(hint["scale"], dtype=float)
        n = len(center)
        rows, rr = [], []
        for signs in itertools.product([-1.0, 1.0], repeat=n):
            s = np.array(signs) / scale
            rows.append(s)
            rr.append(hint["radius"] + s @ center)
        H, h = np.array(rows), np.array(rr)
    best = -np.inf
    for v in enumerate_vertices(H, h, unc.lo, unc.hi):
        best = max(best, det_value(problem, theta, x, v))
    return best


def aro_brute_force(problem, theta, unc):
    """Full two-stage optimum by double enumeration: every binary x against
    every uncertainty vertex. Returns (value, x)."""
    best_val, best_x = np.inf, None
    for bits in itertools.product([0.0, 1.0], repeat=problem.n_x):
        x = np.array(bits)
        q = robust_value_brute_force(problem, theta, unc, x)
        if q < best_val - 1e-12:
            best_val, best_x = q, x
    return best_val, best_x

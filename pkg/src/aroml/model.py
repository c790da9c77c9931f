"""Two-stage problem data model: affine coefficient maps, the polyhedral
uncertainty set, and assembly of the fixed-scenario recourse LP.

An AroProblem is a whole *family* of instances: the maps take the scenario d
and the instance parameter theta as inputs, so one object serves every
sampled instance. The recourse blocks B and b must not depend on d (fixed
recourse); the right-hand side g may, which is how demand-style uncertainty
enters the benchmark problems.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ModelInfeasibleError
from .lp import (GE, LE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp,
                 solve_lp_reduced)

MEMBER_TOL = 1e-7
REJECTION_CAP = 10_000


@dataclass
class AffineMap:
    """value(d, theta) = const + d_coef @ d + th_coef @ theta (leading axes).

    th_sparse is an alternative to th_coef for maps whose theta-dependence
    touches few entries (large constraint blocks): a list with one
    (flat_positions, values) pair per theta component, adding
    theta[t] * values at those positions of the flattened output.
    """

    const: np.ndarray
    d_coef: np.ndarray = None   # shape const.shape + (n_d,)
    th_coef: np.ndarray = None  # shape const.shape + (n_theta,)
    th_sparse: list = None

    def __post_init__(self):
        self.const = np.asarray(self.const, dtype=float)
        if self.d_coef is not None:
            self.d_coef = np.asarray(self.d_coef, dtype=float)
        if self.th_coef is not None:
            self.th_coef = np.asarray(self.th_coef, dtype=float)
        if self.th_coef is not None and self.th_sparse is not None:
            raise InputError("use either th_coef or th_sparse, not both")
        if self.th_sparse is not None:
            self.th_sparse = [(np.asarray(p, dtype=int),
                               np.asarray(v, dtype=float))
                              for p, v in self.th_sparse]

    def __call__(self, d=None, theta=None):
        out = self.const.copy()
        if self.d_coef is not None:
            if d is None:
                raise InputError("map depends on d but no scenario was given")
            out += self.d_coef @ np.asarray(d, dtype=float)
        if self.th_coef is not None or self.th_sparse is not None:
            if theta is None:
                raise InputError("map depends on theta but no parameter was given")
            theta = np.asarray(theta, dtype=float)
        if self.th_coef is not None:
            out += self.th_coef @ theta
        elif self.th_sparse is not None:
            flat = out.reshape(-1)
            for t, (pos, vals) in enumerate(self.th_sparse):
                np.add.at(flat, pos, theta[t] * vals)
        return out

    @property
    def depends_on_d(self):
        return self.d_coef is not None and np.any(self.d_coef != 0.0)

    def to_json(self):
        return {
            "const": self.const.tolist(),
            "d_coef": None if self.d_coef is None else self.d_coef.tolist(),
            "th_coef": None if self.th_coef is None else self.th_coef.tolist(),
            "th_sparse": None if self.th_sparse is None else
            [[p.tolist(), v.tolist()] for p, v in self.th_sparse],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            const=np.array(obj["const"], dtype=float),
            d_coef=None if obj.get("d_coef") is None else np.array(obj["d_coef"], dtype=float),
            th_coef=None if obj.get("th_coef") is None else np.array(obj["th_coef"], dtype=float),
            th_sparse=obj.get("th_sparse"),
        )


@dataclass
class Polyhedron:
    """Bounded nonempty set {d | H d <= h} with explicit box bounds.

    n_aux lifted helper coordinates may be appended to the columns of H
    (e.g. |.|-epigraph variables for L1 budget sets); members are the
    projections onto the first n_d coordinates. A sampler hint makes
    uniform sampling exact for the L1-ball family.
    """

    H: np.ndarray
    h: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_aux: int = 0
    aux_lo: np.ndarray = None
    aux_hi: np.ndarray = None
    sampler_hint: dict = None
    _certified: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.h = np.asarray(self.h, dtype=float)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.H.size == 0:
            self.H = self.H.reshape(0, self.n_d + self.n_aux)
        if self.H.shape[1] != self.n_d + self.n_aux:
            raise InputError("H column count must equal n_d + n_aux")
        if self.H.shape[0] != self.h.shape[0]:
            raise InputError("H and h row counts differ")
        if self.n_aux:
            self.aux_lo = np.asarray(self.aux_lo, dtype=float)
            self.aux_hi = np.asarray(self.aux_hi, dtype=float)
        self._certify()

    @property
    def n_d(self):
        return self.lo.shape[0]

    def _lift_lp(self, objective):
        lo = np.concatenate([self.lo, self.aux_lo]) if self.n_aux else self.lo
        hi = np.concatenate([self.hi, self.aux_hi]) if self.n_aux else self.hi
        return LinearProgram(c=objective, A=self.H, senses=[LE] * self.H.shape[0],
                             rhs=self.h, lo=lo, hi=hi)

    def _certify(self):
        if self._certified:
            return
        dim = self.n_d + self.n_aux
        feas = solve_lp(self._lift_lp(np.zeros(dim)))
        if feas.status != OPTIMAL:
            raise ModelInfeasibleError("uncertainty set is empty")
        for i in range(self.n_d):
            for sign in (1.0, -1.0):
                c = np.zeros(dim)
                c[i] = sign
                if solve_lp(self._lift_lp(c)).status == UNBOUNDED:
                    raise InputError(f"uncertainty set unbounded in coordinate {i}")
        self._certified = True

    def contains(self, d, tol=MEMBER_TOL):
        d = np.asarray(d, dtype=float)
        if np.any(d < self.lo - tol) or np.any(d > self.hi + tol):
            return False
        if self.H.shape[0] == 0:
            return True
        if self.n_aux == 0:
            return bool(np.all(self.H @ d <= self.h + tol))
        # lifted set: membership means some feasible aux completion exists
        dim = self.n_d + self.n_aux
        lp = self._lift_lp(np.zeros(dim))
        lp = LinearProgram(c=lp.c, A=lp.A, senses=lp.senses, rhs=lp.rhs,
                           lo=np.concatenate([d - tol, self.aux_lo]),
                           hi=np.concatenate([d + tol, self.aux_hi]))
        return solve_lp(lp).status == OPTIMAL

    def max_slack_center(self):
        """Point maximizing the minimum slack over rows and box faces."""
        dim = self.n_d + self.n_aux
        norms = np.linalg.norm(self.H, axis=1) if self.H.shape[0] else np.zeros(0)
        # variables (d, aux, s): maximize s
        c = np.zeros(dim + 1)
        c[-1] = -1.0
        rows, rhs = [], []
        for i in range(self.H.shape[0]):
            rows.append(np.concatenate([self.H[i], [max(norms[i], 1e-12)]]))
            rhs.append(self.h[i])
        for j in range(self.n_d):
            if np.isfinite(self.lo[j]):
                r = np.zeros(dim + 1)
                r[j], r[-1] = -1.0, 1.0
                rows.append(r)
                rhs.append(-self.lo[j])
            if np.isfinite(self.hi[j]):
                r = np.zeros(dim + 1)
                r[j], r[-1] = 1.0, 1.0
                rows.append(r)
                rhs.append(self.hi[j])
        lo = np.concatenate([self.lo, self.aux_lo, [0.0]]) if self.n_aux else \
            np.concatenate([self.lo, [0.0]])
        hi = np.concatenate([self.hi, self.aux_hi, [np.inf]]) if self.n_aux else \
            np.concatenate([self.hi, [np.inf]])
        lp = LinearProgram(c=c, A=np.array(rows), senses=[LE] * len(rows),
                           rhs=np.array(rhs), lo=lo, hi=hi)
        sol = solve_lp(lp)
        if sol.status != OPTIMAL:
            raise ModelInfeasibleError("failed to locate an interior point")
        return sol.x[:self.n_d]

    def is_vertex(self, d, tol=1e-6):
        """d is a vertex iff >= n_d linearly independent rows/faces are tight."""
        d = np.asarray(d, dtype=float)
        tight = []
        if self.n_aux == 0 and self.H.shape[0]:
            res = self.h - self.H @ d
            for i in np.flatnonzero(np.abs(res) <= tol * (1.0 + np.abs(self.h))):
                tight.append(self.H[i])
        for j in range(self.n_d):
            for bound in (self.lo[j], self.hi[j]):
                if np.isfinite(bound) and abs(d[j] - bound) <= tol * (1.0 + abs(bound)):
                    e = np.zeros(self.n_d)
                    e[j] = 1.0
                    tight.append(e)
                    break
        if self.n_aux and self.sampler_hint and self.sampler_hint.get("kind") == "l1_ball":
            # budget row in d-space: sum |(d - center)/scale| <= radius
            center = np.array(self.sampler_hint["center"], dtype=float)
            scale = np.array(self.sampler_hint["scale"], dtype=float)
            radius = float(self.sampler_hint["radius"])
            dev = (d - center) / scale
            if abs(np.abs(dev).sum() - radius) <= tol * (1.0 + radius):
                # every cross-polytope facet through d is tight; their span
                # is the base normal plus a unit vector per zero deviation
                tight.append(np.sign(dev) / scale)
                for j in np.flatnonzero(np.abs(dev) <= tol * (1.0 + radius)):
                    e = np.zeros(self.n_d)
                    e[j] = 1.0
                    tight.append(e)
        if not tight:
            return False
        return np.linalg.matrix_rank(np.array(tight), tol=1e-8) >= self.n_d

    def to_json(self):
        return {
            "H": self.H.tolist(), "h": self.h.tolist(),
            "lo": self.lo.tolist(), "hi": self.hi.tolist(),
            "n_aux": self.n_aux,
            "aux_lo": None if self.aux_lo is None else self.aux_lo.tolist(),
            "aux_hi": None if self.aux_hi is None else self.aux_hi.tolist(),
            "sampler_hint": self.sampler_hint,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(H=np.array(obj["H"], dtype=float), h=np.array(obj["h"], dtype=float),
                   lo=np.array(obj["lo"], dtype=float), hi=np.array(obj["hi"], dtype=float),
                   n_aux=obj.get("n_aux", 0),
                   aux_lo=None if obj.get("aux_lo") is None else np.array(obj["aux_lo"]),
                   aux_hi=None if obj.get("aux_hi") is None else np.array(obj["aux_hi"]),
                   sampler_hint=obj.get("sampler_hint"))


@dataclass
class AroProblem:
    """min_x max_d min_y  c(d,th).x + b(th).y + w(d,th)
    s.t. A(d,th) x + B(th) y <= g(d,th),  x binary.

    Constraint row order is canonical and stable across (theta, x, d): tight
    constraint indices always refer to the same semantic row. y_lo/y_hi are
    optional bounds that must be *redundant* with the rows (solver speed
    hint only; they never change the feasible set).
    """

    n_x: int
    n_y: int
    n_d: int
    n_theta: int
    c_map: AffineMap            # over x; may depend on (d, theta)
    b_map: AffineMap            # over y; theta only (fixed recourse)
    A_map: AffineMap            # (m, n_x); may depend on (d, theta)
    B_map: AffineMap            # (m, n_y); theta only (fixed recourse)
    g_map: AffineMap            # (m,); may depend on (d, theta)
    w_map: AffineMap = None     # scalar objective offset; may depend on (d, theta)
    y_lo: np.ndarray = None
    y_hi: np.ndarray = None
    row_labels: list = None

    def __post_init__(self):
        if self.b_map.d_coef is not None or self.B_map.d_coef is not None:
            raise InputError("fixed recourse violated: b or B depends on d")
        if self.w_map is None:
            self.w_map = AffineMap(const=np.zeros(()))
        if self.y_lo is None:
            self.y_lo = np.full(self.n_y, -np.inf)
        if self.y_hi is None:
            self.y_hi = np.full(self.n_y, np.inf)
        self.y_lo = np.asarray(self.y_lo, dtype=float)
        self.y_hi = np.asarray(self.y_hi, dtype=float)
        m = self.m
        if self.A_map.const.shape != (m, self.n_x):
            raise InputError("A map shape mismatch")
        if self.B_map.const.shape != (m, self.n_y):
            raise InputError("B map shape mismatch")
        if self.g_map.const.shape != (m,):
            raise InputError("g map shape mismatch")
        if self.c_map.const.shape != (self.n_x,) or self.b_map.const.shape != (self.n_y,):
            raise InputError("cost map shape mismatch")

    @property
    def m(self):
        return self.g_map.const.shape[0]

    def first_stage_cost(self, theta, x, d):
        return float(self.c_map(d, theta) @ x) + float(self.w_map(d, theta))

    def to_json(self):
        return {
            "n_x": self.n_x, "n_y": self.n_y, "n_d": self.n_d, "n_theta": self.n_theta,
            "maps": {k: getattr(self, k + "_map").to_json() for k in ("c", "b", "A", "B", "g", "w")},
            "y_lo": self.y_lo.tolist(), "y_hi": self.y_hi.tolist(),
            "row_labels": self.row_labels,
        }

    @classmethod
    def from_json(cls, obj):
        maps = {k + "_map": AffineMap.from_json(obj["maps"][k]) for k in ("c", "b", "A", "B", "g", "w")}
        return cls(n_x=obj["n_x"], n_y=obj["n_y"], n_d=obj["n_d"], n_theta=obj["n_theta"],
                   y_lo=np.array(obj["y_lo"], dtype=float), y_hi=np.array(obj["y_hi"], dtype=float),
                   row_labels=obj.get("row_labels"), **maps)


def save_instance(path, problem, unc):
    with open(path, "w") as f:
        json.dump({"problem": problem.to_json(), "uncertainty": unc.to_json()}, f)


def load_instance(path):
    with open(path) as f:
        obj = json.load(f)
    return AroProblem.from_json(obj["problem"]), Polyhedron.from_json(obj["uncertainty"])


def build_det(p, theta, x, d):
    """LP over y for fixed (theta, x, d): min b.y s.t. By <= g - Ax.

    The objective excludes the first-stage cost c.x + w; det_value adds it.
    Row i corresponds to canonical constraint row i of the problem.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if x.shape != (p.n_x,):
        raise InputError(f"x must have length {p.n_x}")
    if d.shape != (p.n_d,):
        raise InputError(f"d must have length {p.n_d}")
    B = p.B_map(theta=theta)
    rhs = p.g_map(d, theta) - p.A_map(d, theta) @ x
    return LinearProgram(c=p.b_map(theta=theta), A=B, senses=[LE] * p.m, rhs=rhs,
                         lo=p.y_lo.copy(), hi=p.y_hi.copy())


def det_solve(p, theta, x, d):
    """Solve Det(theta, x, d); returns (value, LpSolution). value is +inf
    when the recourse is infeasible for this scenario."""
    sol = solve_lp_reduced(build_det(p, theta, x, d))
    if sol.status != OPTIMAL:
        return np.inf, sol
    return p.first_stage_cost(theta, x, d) + sol.objective, sol


def det_value(p, theta, x, d):
    return det_solve(p, theta, x, d)[0]


def sample_ball(center, r, rng):
    """Uniform sample from the L2 ball B(center, r)."""
    if r < 0:
        raise InputError("radius must be nonnegative")
    center = np.asarray(center, dtype=float)
    if r == 0:
        return center.copy()
    n = center.shape[0]
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    return center + r * rng.random() ** (1.0 / n) * v


def _sample_l1_ball(hint, lo, hi, rng):
    center = np.array(hint["center"], dtype=float)
    scale = np.array(hint["scale"], dtype=float)
    radius = float(hint["radius"])
    n = center.shape[0]
    for _ in range(REJECTION_CAP):
        # uniform over {z : sum |z_i| <= radius}: Dirichlet magnitudes, random
        # signs, radial scaling by U^(1/n)
        mags = rng.dirichlet(np.ones(n)) * radius * rng.random() ** (1.0 / n)
        signs = rng.integers(0, 2, size=n) * 2 - 1
        d = center + scale * signs * mags
        if np.all(d >= lo - MEMBER_TOL) and np.all(d <= hi + MEMBER_TOL):
            return d
    raise ModelInfeasibleError("L1-ball sampler failed against the box bounds")


def _hit_and_run(D, rng, burn_factor=100, thin=10):
    d = D.max_slack_center()
    n = D.n_d
    steps = burn_factor * n + thin
    for _ in range(steps):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        t_lo, t_hi = -np.inf, np.inf
        # box chords
        for j in range(n):
            if abs(v[j]) > 1e-14:
                a = (D.lo[j] - d[j]) / v[j]
                b = (D.hi[j] - d[j]) / v[j]
                t_lo = max(t_lo, min(a, b))
                t_hi = min(t_hi, max(a, b))
        if D.n_aux == 0 and D.H.shape[0]:
            Hv = D.H @ v
            res = D.h - D.H @ d
            for i in range(D.H.shape[0]):
                if Hv[i] > 1e-14:
                    t_hi = min(t_hi, res[i] / Hv[i])
                elif Hv[i] < -1e-14:
                    t_lo = max(t_lo, res[i] / Hv[i])
        elif D.n_aux:
            t_lo, t_hi = _lifted_chord(D, d, v)
        if t_hi <= t_lo:
            continue
        d = d + (t_lo + (t_hi - t_lo) * rng.random()) * v
    return d


def _lifted_chord(D, d, v):
    """Extent of {t : d + t v in D} for a lifted set, via two LPs over (t, aux)."""
    dim = 1 + D.n_aux
    Hd = D.H[:, :D.n_d]
    Ha = D.H[:, D.n_d:]
    A = np.hstack([(Hd @ v)[:, None], Ha])
    rhs = D.h - Hd @ d
    lo = np.concatenate([[-np.inf], D.aux_lo])
    hi = np.concatenate([[np.inf], D.aux_hi])
    ts = []
    for sign in (1.0, -1.0):
        c = np.zeros(dim)
        c[0] = sign
        # keep d + t v inside the box as well
        rows, rr = [A], [rhs]
        for j in range(D.n_d):
            if abs(v[j]) > 1e-14:
                r = np.zeros(dim)
                r[0] = v[j]
                rows.append(r[None, :])
                rr.append(np.array([D.hi[j] - d[j]]))
                r2 = np.zeros(dim)
                r2[0] = -v[j]
                rows.append(r2[None, :])
                rr.append(np.array([d[j] - D.lo[j]]))
        Afull = np.vstack(rows)
        rfull = np.concatenate(rr)
        sol = solve_lp(LinearProgram(c=c, A=Afull, senses=[LE] * Afull.shape[0],
                                     rhs=rfull, lo=lo, hi=hi))
        if sol.status != OPTIMAL:
            return 0.0, 0.0
        ts.append(sol.x[0])
    return min(ts), max(ts)


def sample_polyhedron(D, rng):
    """Approximately uniform sample: exact for L1-ball hints, rejection from
    the bounding box otherwise, hit-and-run as the fallback."""
    if D.sampler_hint and D.sampler_hint.get("kind") == "l1_ball":
        return _sample_l1_ball(D.sampler_hint, D.lo, D.hi, rng)
    if not (np.all(np.isfinite(D.lo)) and np.all(np.isfinite(D.hi))):
        return _hit_and_run(D, rng)
    for _ in range(REJECTION_CAP):
        d = D.lo + (D.hi - D.lo) * rng.random(D.n_d)
        if D.n_aux == 0:
            if D.H.shape[0] == 0 or np.all(D.H @ d <= D.h + MEMBER_TOL):
                return d
        elif D.contains(d):
            return d
    return _hit_and_run(D, rng)

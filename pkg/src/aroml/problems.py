"""Benchmark problem generators: facility location, multi-item inventory,
and unit commitment, each emitting an AroProblem plus its uncertainty set.

The generators fix the constraint row order once and for all (documented in
row_labels), because the wait-and-see strategies are sets of row indices and
must mean the same row on every instance of a family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InputError
from .model import AffineMap, AroProblem, Polyhedron


# ---------------------------------------------------------------------------
# facility location


@dataclass
class FacilityParams:
    n: int                 # candidate locations
    m: int                 # destinations
    f: np.ndarray          # construction costs
    p: np.ndarray          # capacities
    c: np.ndarray          # transport costs, shape (n, m)
    gamma: float           # demand budget

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.n < 1 or self.m < 1:
            raise InputError("need at least one location and destination")
        if self.f.shape != (self.n,) or self.p.shape != (self.n,):
            raise InputError("f and p must have length n")
        if self.c.shape != (self.n, self.m):
            raise InputError("c must be n x m")
        if np.any(self.p <= 0) or np.any(self.f <= 0) or np.any(self.c <= 0):
            raise InputError("facility costs and capacities must be positive")


def make_facility(params, theta_of="f", d_lo=4.0, d_hi=6.0):
    """Row order: m demand rows, n capacity rows, n*m nonnegativity rows
    (row 6 + 3(i-1) + j in the 3x3 numbering). theta_of selects which cost
    block the feature vector replaces: "f" (construction) or "c" (transport,
    flattened row-major)."""
    n, m = params.n, params.m
    n_y = n * m
    mr = m + n + n_y
    A = np.zeros((mr, n))
    B = np.zeros((mr, n_y))
    g_const = np.zeros(mr)
    g_d = np.zeros((mr, m))
    labels = []
    for j in range(m):
        for i in range(n):
            B[j, i * m + j] = -1.0
        g_d[j, j] = -1.0
        labels.append(f"demand[{j}]")
    for i in range(n):
        B[m + i, i * m:(i + 1) * m] = 1.0
        A[m + i, i] = -params.p[i]
        labels.append(f"capacity[{i}]")
    for k in range(n_y):
        B[m + n + k, k] = -1.0
        labels.append(f"nonneg[{k // m},{k % m}]")

    if theta_of == "f":
        c_map = AffineMap(const=np.zeros(n), th_coef=np.eye(n))
        b_map = AffineMap(const=params.c.ravel())
        n_theta = n
    elif theta_of == "c":
        c_map = AffineMap(const=params.f)
        b_map = AffineMap(const=np.zeros(n_y), th_coef=np.eye(n_y))
        n_theta = n_y
    else:
        raise InputError(f"unknown facility feature block {theta_of!r}")

    prob = AroProblem(n_x=n, n_y=n_y, n_d=m, n_theta=n_theta,
                      c_map=c_map, b_map=b_map,
                      A_map=AffineMap(const=A), B_map=AffineMap(const=B),
                      g_map=AffineMap(const=g_const, d_coef=g_d),
                      row_labels=labels)
    unc = Polyhedron(H=np.ones((1, m)), h=np.array([params.gamma]),
                     lo=np.full(m, d_lo), hi=np.full(m, d_hi))
    return prob, unc


# ---------------------------------------------------------------------------
# multi-item inventory control


@dataclass
class InventoryParams:
    n: int
    l: np.ndarray          # lot sizes
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: float
    gamma: float

    def __post_init__(self):
        for name in ("l", "c1", "c2", "c3"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
            if getattr(self, name).shape != (self.n,):
                raise InputError(f"{name} must have length n")
        # ordering that keeps the wait-and-see channel from being trivially
        # cheapest; note the nominal distributions put c3 near or above c4,
        # so only the first-stage-vs-recourse ordering is enforced
        if np.any(self.c1 > self.c3 + 1e-9) or np.any(self.c2 > self.c3 + 1e-9):
            raise InputError("cost ordering violated: need c1, c2 <= c3")
        if np.any(self.l <= 0):
            raise InputError("lot sizes must be positive")


def l1_ball_set(center, radius, scale=None, box_cap=None):
    """{d : sum |(d_i - center_i)/scale_i| <= radius} as a Polyhedron.

    Direct 2^n rows for n <= 10, the lifted epigraph form above that; both
    carry the exact sampler hint. box_cap additionally bounds each scaled
    deviation (budget sets cap it at 1 regardless of the budget).
    """
    center = np.asarray(center, dtype=float)
    n = center.shape[0]
    scale = np.ones(n) if scale is None else np.asarray(scale, dtype=float)
    if radius <= 0 or np.any(scale <= 0):
        raise InputError("radius and scales must be positive")
    reach = radius if box_cap is None else min(radius, box_cap)
    lo = center - reach * scale
    hi = center + reach * scale
    hint = {"kind": "l1_ball", "center": center.tolist(),
            "scale": scale.tolist(), "radius": float(radius)}
    if n <= 10:
        rows, rhs = [], []
        for mask in range(2 ** n):
            s = np.array([1.0 if mask >> i & 1 else -1.0 for i in range(n)])
            rows.append(s / scale)
            rhs.append(radius + float((s / scale) @ center))
        return Polyhedron(H=np.array(rows), h=np.array(rhs), lo=lo, hi=hi,
                          sampler_hint=hint)
    # lifted: u_i >= |(d_i - center_i)/scale_i|, sum u <= radius
    H = np.zeros((2 * n + 1, 2 * n))
    h = np.zeros(2 * n + 1)
    for i in range(n):
        H[2 * i, i] = 1.0 / scale[i]
        H[2 * i, n + i] = -1.0
        h[2 * i] = center[i] / scale[i]
        H[2 * i + 1, i] = -1.0 / scale[i]
        H[2 * i + 1, n + i] = -1.0
        h[2 * i + 1] = -center[i] / scale[i]
    H[-1, n:] = 1.0
    h[-1] = radius
    return Polyhedron(H=H, h=h, lo=lo, hi=hi, n_aux=n,
                      aux_lo=np.zeros(n), aux_hi=np.full(n, radius),
                      sampler_hint=hint)


def make_inventory(params, theta_of="c3", d_center=50.0):
    """x = (x1, x2) lot orders, y = post-demand orders. Rows: n stock
    balance rows (l x1 + l x2 + y >= d), then n nonnegativity rows.

    The leftover-stock cost c4 * sum(l x1 + l x2 + y - d) is folded into
    the cost coefficients plus a -c4 * sum(d) objective offset.
    """
    n = params.n
    l = params.l
    mr = 2 * n
    A = np.zeros((mr, 2 * n))
    B = np.zeros((mr, n))
    g_d = np.zeros((mr, n))
    labels = []
    for i in range(n):
        A[i, i] = -l[i]
        A[i, n + i] = -l[i]
        B[i, i] = -1.0
        g_d[i, i] = -1.0
        labels.append(f"stock[{i}]")
    for i in range(n):
        B[n + i, i] = -1.0
        labels.append(f"nonneg[{i}]")

    c4 = float(params.c4)
    if theta_of == "c3":
        n_theta = n
        c_const = np.concatenate([(params.c1 + c4) * l, (params.c2 + c4) * l])
        c_map = AffineMap(const=c_const)
        b_map = AffineMap(const=np.full(n, c4), th_coef=np.eye(n))
    elif theta_of == "c2c3":
        n_theta = 2 * n
        c_const = np.concatenate([(params.c1 + c4) * l, np.full(n, c4) * l])
        c_th = np.zeros((2 * n, 2 * n))
        c_th[n:, :n] = np.diag(l)   # theta[:n] = c2 enters the x2 block
        c_map = AffineMap(const=c_const, th_coef=c_th)
        b_th = np.zeros((n, 2 * n))
        b_th[:, n:] = np.eye(n)     # theta[n:] = c3
        b_map = AffineMap(const=np.full(n, c4), th_coef=b_th)
    else:
        raise InputError(f"unknown inventory feature block {theta_of!r}")

    w_map = AffineMap(const=np.zeros(()), d_coef=np.full(n, -c4))
    prob = AroProblem(n_x=2 * n, n_y=n, n_d=n, n_theta=n_theta,
                      c_map=c_map, b_map=b_map,
                      A_map=AffineMap(const=A), B_map=AffineMap(const=B),
                      g_map=AffineMap(const=np.zeros(mr), d_coef=g_d),
                      w_map=w_map, row_labels=labels)
    unc = l1_ball_set(np.full(n, d_center), params.gamma)
    return prob, unc


# ---------------------------------------------------------------------------
# unit commitment


@dataclass
class UnitCommitmentData:
    """Per-unit arrays (length n) plus the demand profile (length m).

    K is the stairwise startup cost, one list of ND_j values per unit;
    T the piecewise block upper limits, one list of NL_j values per unit
    ending at Pbar. R defaults to 0.1 * D when absent.
    """

    n: int
    m: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    Pbar: np.ndarray
    Pmin: np.ndarray
    RU: np.ndarray
    RD: np.ndarray
    SU: np.ndarray
    SD: np.ndarray
    UT: np.ndarray
    DT: np.ndarray
    C: np.ndarray          # shutdown costs
    K: list                # stair startup costs per unit
    T: list                # block upper limits per unit
    U0: np.ndarray
    S0: np.ndarray
    V0: np.ndarray
    p0: np.ndarray
    D: np.ndarray
    R: np.ndarray = None
    G: np.ndarray = None
    L: np.ndarray = None

    def __post_init__(self):
        for name in ("a", "b", "c", "Pbar", "Pmin", "RU", "RD", "SU", "SD",
                     "C", "p0"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("UT", "DT", "U0", "S0", "V0"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=int))
        self.D = np.asarray(self.D, dtype=float)
        if self.D.shape != (self.m,):
            raise InputError("demand profile must have length m")
        if self.R is None:
            self.R = 0.1 * self.D
        self.R = np.asarray(self.R, dtype=float)
        self.K = [np.asarray(k, dtype=float) for k in self.K]
        self.T = [np.asarray(t, dtype=float) for t in self.T]
        for j in range(self.n):
            if len(self.T[j]) < 2:
                raise InputError("each unit needs at least two cost blocks")
            if np.any(np.diff(self.T[j]) <= 0) or \
                    abs(self.T[j][-1] - self.Pbar[j]) > 1e-9:
                raise InputError(
                    f"unit {j}: block limits must increase up to Pbar")
            if np.any(np.diff(self.K[j]) < 0):
                raise InputError(f"unit {j}: stair costs must be nondecreasing")
        if np.any(self.UT < 1) or np.any(self.DT < 1):
            raise InputError("UT and DT must be at least 1")
        g_want = np.minimum(self.m, np.maximum(0, self.UT - self.U0) * self.V0)
        l_want = np.minimum(self.m,
                            np.maximum(0, self.DT - self.S0) * (1 - self.V0))
        if self.G is None:
            self.G = g_want
        if self.L is None:
            self.L = l_want
        self.G = np.asarray(self.G, dtype=int)
        self.L = np.asarray(self.L, dtype=int)
        if np.any(self.G != g_want):
            raise InputError("G inconsistent with UT, U0, V0: "
                             "expected min(m, max(0, UT - U0) * V0)")
        if np.any(self.L != l_want):
            raise InputError("L inconsistent with DT, S0, V0: "
                             "expected min(m, max(0, DT - S0) * (1 - V0))")
        if np.any((self.V0 == 1) & ((self.U0 < 1) | (self.S0 != 0))) or \
                np.any((self.V0 == 0) & ((self.S0 < 1) | (self.U0 != 0))):
            raise InputError("U0/S0 must reflect the initial state V0")

    @property
    def NL(self):
        return [len(t) for t in self.T]

    @property
    def ND(self):
        return [len(k) for k in self.K]

    def A_const(self, j):
        """Constant part of A_j = a_j + b_j Pmin_j + c_j Pmin_j^2 (the b_j
        term is the theta-dependent part)."""
        return float(self.a[j] + self.c[j] * self.Pmin[j] ** 2)

    def F_const(self, j, l):
        """Constant part of the block-l slope b_j + c_j (T_l + T_{l-1})."""
        t_prev = self.Pmin[j] if l == 0 else self.T[j][l - 1]
        return float(self.c[j] * (self.T[j][l] + t_prev))

    def to_json(self):
        out = {}
        for name in ("n", "m"):
            out[name] = getattr(self, name)
        for name in ("a", "b", "c", "Pbar", "Pmin", "RU", "RD", "SU", "SD",
                     "UT", "DT", "C", "U0", "S0", "V0", "p0", "D", "R"):
            out[name] = np.asarray(getattr(self, name)).tolist()
        out["K"] = [k.tolist() for k in self.K]
        out["T"] = [t.tolist() for t in self.T]
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(**obj)


def load_uc_data(path=None):
    if path is None:
        src = resources.files("aroml").joinpath("data/uc10.json")
        obj = json.loads(src.read_text())
    else:
        with open(path) as fh:
            obj = json.load(fh)
    return UnitCommitmentData.from_json(obj)


def uc_row_census(data):
    """Closed-form row counts per constraint family (appendix numbering)."""
    n, m = data.n, data.m
    NL, ND = data.NL, data.ND
    census = {
        "c1": m,
        "c2": m,
        "c3": n * m,
        "c4": n * m,
        "c5": n * m,
        "c6": m * sum(max(nl - 2, 0) for nl in NL),
        "c7": n * m,
        "c8": m * sum(NL),
        "c10": m * sum(ND),
        "c11": n * m,
        "c12": n * m,
        "c13": n * m,
        "c14": 2 * n * m,
        "c15": 2 * n * m,
        "c16": n * m,
        "c17": n * (m - 1),
        "c18": n * m,
        "c21": int(np.sum(data.G > 0)),
        "c22": int(sum(max(0, m - data.UT[j] + 1 - data.G[j])
                       for j in range(n))),
        "c23": int(sum(max(0, m - max(m - data.UT[j] + 1, data.G[j]))
                       for j in range(n))),
        "c24": int(np.sum(data.L > 0)),
        "c25": int(sum(max(0, m - data.DT[j] + 1 - data.L[j])
                       for j in range(n))),
        "c26": int(sum(max(0, m - max(m - data.DT[j] + 1, data.L[j]))
                       for j in range(n))),
    }
    census["total"] = sum(v for k, v in census.items() if k != "total")
    return census


def make_unit_commitment(data, gamma):
    """Here-and-now x = commitment v_j(k) (unit-major); recourse
    y = [p, pbar, delta, cp, cu, cd]. Rows follow the appendix order; the
    uncertain demand enters only the power-balance rhs. theta is the
    production-cost slope vector b (one component per unit)."""
    n, m = data.n, data.m
    NL = data.NL
    n_x = n * m
    off_p = 0
    off_pb = n * m
    off_delta = 2 * n * m
    delta_off = []
    acc = off_delta
    for j in range(n):
        delta_off.append(acc)
        acc += NL[j] * m
    off_cp = acc
    off_cu = off_cp + n * m
    off_cd = off_cu + n * m
    n_y = off_cd + n * m

    def v(j, k):
        return j * m + k

    def dl(j, l, k):
        return delta_off[j] + l * m + k

    rows_A, rows_B, g_c, g_d, labels = [], [], [], [], []
    a_sparse = [([], []) for _ in range(n)]  # theta_j hits on the A block
    b_sparse = [([], []) for _ in range(n)]  # theta_j hits on the B block

    def add(ax=(), by=(), rhs=0.0, dk=None, label=""):
        ra = np.zeros(n_x)
        rb = np.zeros(n_y)
        for idx, val in ax:
            ra[idx] += val
        for idx, val in by:
            rb[idx] += val
        gd = np.zeros(m)
        if dk is not None:
            gd[dk] = -1.0
        rows_A.append(ra)
        rows_B.append(rb)
        g_c.append(rhs)
        g_d.append(gd)
        labels.append(label)
        return len(rows_A) - 1

    def vpast(j, k):
        """Commitment at period k (0-based); negative/zero means history."""
        return ("var", v(j, k)) if k >= 0 else ("const", float(data.V0[j]))

    # (c1) power balance: -sum_j p_j(k) <= -d(k)
    for k in range(m):
        add(by=[(off_p + v(j, k), -1.0) for j in range(n)], dk=k,
            label=f"c1[{k}]")
    # (c2) spinning reserve at nominal demand
    for k in range(m):
        add(by=[(off_pb + v(j, k), -1.0) for j in range(n)],
            rhs=-(data.D[k] + data.R[k]), label=f"c2[{k}]")
    # (c3) production cost: A_j v + sum_l F_lj delta - cp <= 0
    for j in range(n):
        for k in range(m):
            ri = add(ax=[(v(j, k), data.A_const(j))],
                     by=[(dl(j, l, k), data.F_const(j, l))
                         for l in range(NL[j])] + [(off_cp + v(j, k), -1.0)],
                     label=f"c3[{j},{k}]")
            a_sparse[j][0].append(ri * n_x + v(j, k))
            a_sparse[j][1].append(data.Pmin[j])
            for l in range(NL[j]):
                b_sparse[j][0].append(ri * n_y + dl(j, l, k))
                b_sparse[j][1].append(1.0)
    # (c4) output decomposition (one-sided): p - sum delta - Pmin v <= 0
    for j in range(n):
        for k in range(m):
            add(ax=[(v(j, k), -data.Pmin[j])],
                by=[(off_p + v(j, k), 1.0)] +
                [(dl(j, l, k), -1.0) for l in range(NL[j])],
                label=f"c4[{j},{k}]")
    # (c5) first block limit
    for j in range(n):
        for k in range(m):
            add(by=[(dl(j, 0, k), 1.0)], rhs=data.T[j][0] - data.Pmin[j],
                label=f"c5[{j},{k}]")
    # (c6) middle block limits
    for j in range(n):
        for l in range(1, NL[j] - 1):
            for k in range(m):
                add(by=[(dl(j, l, k), 1.0)],
                    rhs=data.T[j][l] - data.T[j][l - 1],
                    label=f"c6[{j},{l},{k}]")
    # (c7) last block limit
    for j in range(n):
        for k in range(m):
            add(by=[(dl(j, NL[j] - 1, k), 1.0)],
                rhs=data.Pbar[j] - data.T[j][NL[j] - 2],
                label=f"c7[{j},{k}]")
    # (c8) block nonnegativity
    for j in range(n):
        for l in range(NL[j]):
            for k in range(m):
                add(by=[(dl(j, l, k), -1.0)], label=f"c8[{j},{l},{k}]")
    # (c10) stairwise startup cost
    for j in range(n):
        for k in range(m):
            for t in range(1, len(data.K[j]) + 1):
                Kt = data.K[j][t - 1]
                ax = [(v(j, k), Kt)]
                rhs = 0.0
                for nn in range(1, t + 1):
                    kind, val = vpast(j, k - nn)
                    if kind == "var":
                        ax.append((val, -Kt))
                    else:
                        rhs += Kt * val
                add(ax=ax, by=[(off_cu + v(j, k), -1.0)], rhs=rhs,
                    label=f"c10[{j},{k},{t}]")
    # (c11) startup cost nonnegativity
    for j in range(n):
        for k in range(m):
            add(by=[(off_cu + v(j, k), -1.0)], label=f"c11[{j},{k}]")
    # (c12) shutdown cost
    for j in range(n):
        for k in range(m):
            ax = [(v(j, k), -data.C[j])]
            rhs = 0.0
            kind, val = vpast(j, k - 1)
            if kind == "var":
                ax.append((val, data.C[j]))
            else:
                rhs -= data.C[j] * val
            add(ax=ax, by=[(off_cd + v(j, k), -1.0)], rhs=rhs,
                label=f"c12[{j},{k}]")
    # (c13) shutdown cost nonnegativity
    for j in range(n):
        for k in range(m):
            add(by=[(off_cd + v(j, k), -1.0)], label=f"c13[{j},{k}]")
    # (c14) generation limits: Pmin v <= p <= pbar
    for j in range(n):
        for k in range(m):
            add(ax=[(v(j, k), data.Pmin[j])], by=[(off_p + v(j, k), -1.0)],
                label=f"c14lo[{j},{k}]")
            add(by=[(off_p + v(j, k), 1.0), (off_pb + v(j, k), -1.0)],
                label=f"c14hi[{j},{k}]")
    # (c15) available power limits: 0 <= pbar <= Pbar v
    for j in range(n):
        for k in range(m):
            add(by=[(off_pb + v(j, k), -1.0)], label=f"c15lo[{j},{k}]")
            add(ax=[(v(j, k), -data.Pbar[j])], by=[(off_pb + v(j, k), 1.0)],
                label=f"c15hi[{j},{k}]")
    # (c16) startup/ramp-up limit on pbar
    for j in range(n):
        for k in range(m):
            ax = [(v(j, k), data.Pbar[j] - data.SU[j])]
            by = [(off_pb + v(j, k), 1.0)]
            rhs = data.Pbar[j]
            kind, val = vpast(j, k - 1)
            if kind == "var":
                ax.append((val, data.SU[j] - data.RU[j]))
                by.append((off_p + v(j, k - 1), -1.0))
            else:
                rhs += (data.RU[j] - data.SU[j]) * val + data.p0[j]
            add(ax=ax, by=by, rhs=rhs, label=f"c16[{j},{k}]")
    # (c17) shutdown ramp limit
    for j in range(n):
        for k in range(m - 1):
            add(ax=[(v(j, k), -data.SD[j]),
                    (v(j, k + 1), data.SD[j] - data.Pbar[j])],
                by=[(off_pb + v(j, k), 1.0)], label=f"c17[{j},{k}]")
    # (c18) ramp-down limit
    for j in range(n):
        for k in range(m):
            ax = [(v(j, k), data.SD[j] - data.RD[j])]
            by = [(off_p + v(j, k), -1.0)]
            rhs = data.Pbar[j]
            kind, val = vpast(j, k - 1)
            if kind == "var":
                ax.append((val, data.Pbar[j] - data.SD[j]))
                by.append((off_p + v(j, k - 1), 1.0))
            else:
                rhs -= (data.Pbar[j] - data.SD[j]) * val + data.p0[j]
            add(ax=ax, by=by, rhs=rhs, label=f"c18[{j},{k}]")
    # (c21) initial minimum up time
    for j in range(n):
        if data.G[j] > 0:
            add(ax=[(v(j, k), -1.0) for k in range(data.G[j])],
                rhs=-float(data.G[j]), label=f"c21[{j}]")
    # (c22) minimum up time
    for j in range(n):
        ut = int(data.UT[j])
        for k in range(int(data.G[j]), m - ut + 1):
            ax = [(v(j, k), float(ut))]
            rhs = 0.0
            kind, val = vpast(j, k - 1)
            if kind == "var":
                ax.append((val, -float(ut)))
            else:
                rhs += ut * val
            for nn in range(k, k + ut):
                ax.append((v(j, nn), -1.0))
            add(ax=ax, rhs=rhs, label=f"c22[{j},{k}]")
    # (c23) minimum up time, terminal periods
    for j in range(n):
        ut = int(data.UT[j])
        for k in range(max(m - ut + 1, int(data.G[j])), m):
            w = float(m - k)
            ax = [(v(j, k), w)]
            rhs = 0.0
            kind, val = vpast(j, k - 1)
            if kind == "var":
                ax.append((val, -w))
            else:
                rhs += w * val
            for nn in range(k, m):
                ax.append((v(j, nn), -1.0))
            add(ax=ax, rhs=rhs, label=f"c23[{j},{k}]")
    # (c24) initial minimum down time
    for j in range(n):
        if data.L[j] > 0:
            add(ax=[(v(j, k), 1.0) for k in range(data.L[j])],
                label=f"c24[{j}]")
    # (c25) minimum down time
    for j in range(n):
        dt = int(data.DT[j])
        for k in range(int(data.L[j]), m - dt + 1):
            ax = [(v(j, k), -float(dt))]
            rhs = float(dt)
            kind, val = vpast(j, k - 1)
            if kind == "var":
                ax.append((val, float(dt)))
            else:
                rhs -= dt * val
            for nn in range(k, k + dt):
                ax.append((v(j, nn), 1.0))
            add(ax=ax, rhs=rhs, label=f"c25[{j},{k}]")
    # (c26) minimum down time, terminal periods
    for j in range(n):
        dt = int(data.DT[j])
        for k in range(max(m - dt + 1, int(data.L[j])), m):
            w = float(m - k)
            ax = [(v(j, k), -w)]
            rhs = w
            kind, val = vpast(j, k - 1)
            if kind == "var":
                ax.append((val, w))
            else:
                rhs -= w * val
            for nn in range(k, m):
                ax.append((v(j, nn), 1.0))
            add(ax=ax, rhs=rhs, label=f"c26[{j},{k}]")

    mr = len(rows_A)
    A_sp = [(np.array(p, dtype=int), np.array(vv)) for p, vv in a_sparse]
    B_sp = [(np.array(p, dtype=int), np.array(vv)) for p, vv in b_sparse]
    b_obj = np.zeros(n_y)
    b_obj[off_cp:] = 1.0  # objective = sum of cp + cu + cd
    prob = AroProblem(
        n_x=n_x, n_y=n_y, n_d=m, n_theta=n,
        c_map=AffineMap(const=np.zeros(n_x)),
        b_map=AffineMap(const=b_obj),
        A_map=AffineMap(const=np.array(rows_A), th_sparse=A_sp),
        B_map=AffineMap(const=np.array(rows_B), th_sparse=B_sp),
        g_map=AffineMap(const=np.array(g_c), d_coef=np.array(g_d)),
        y_lo=np.zeros(n_y),  # redundant with rows; keeps the LPs smaller
        row_labels=labels)
    unc = l1_ball_set(data.D, gamma, scale=0.1 * data.D, box_cap=1.0)
    return prob, unc


# ---------------------------------------------------------------------------
# presets


@dataclass
class Preset:
    name: str
    family: str
    problem: AroProblem
    unc: Polyhedron
    theta_bar: np.ndarray   # center of the instance-parameter ball
    radius: float
    extra: dict = field(default_factory=dict)


def _facility_preset(name, n, gamma, theta_of, radius, f_lo, f_hi, seed):
    rng = np.random.default_rng(seed)
    if theta_of == "c":
        c_bar = rng.uniform(2.0, 4.0, size=(n, n))
        params = FacilityParams(n=n, m=n, f=rng.uniform(3.0, 5.0, size=n),
                                p=rng.uniform(8.0, 18.0, size=n),
                                c=c_bar, gamma=gamma)
        theta_bar = c_bar.ravel()
    else:
        f_bar = rng.uniform(f_lo, f_hi, size=n)
        params = FacilityParams(n=n, m=n, f=f_bar,
                                p=rng.uniform(8.0, 18.0, size=n),
                                c=rng.uniform(2.0, 4.0, size=(n, n)),
                                gamma=gamma)
        theta_bar = f_bar
    prob, unc = make_facility(params, theta_of=theta_of)
    return Preset(name=name, family="facility", problem=prob, unc=unc,
                  theta_bar=theta_bar, radius=radius,
                  extra={"params": params})


def _inventory_preset(name, n, gamma, theta_of, radius, seed):
    rng = np.random.default_rng(seed)
    # both lots together stay just below the smallest worst-case demand
    # (50), so ordering is never marginal against the adversary and the
    # master relaxation stays integral; sampled scenarios still dip below
    # two-lot coverage for every item, which is what varies the tight sets
    l = rng.uniform(24.4, 24.9, size=n)
    c3_bar = rng.uniform(60.0, 80.0, size=n)
    c2_bar = rng.uniform(40.0, 60.0, size=n)
    c1 = rng.uniform(40.0, 60.0, size=n)
    # keep the first-stage costs below the recourse cost for every theta in
    # the sampling ball
    c1 = np.minimum(c1, c3_bar - radius - 1.0)
    c2_bar = np.minimum(c2_bar, c3_bar - radius - 1.0)
    params = InventoryParams(n=n, l=l, c1=c1, c2=c2_bar, c3=c3_bar,
                             c4=60.0, gamma=gamma)
    prob, unc = make_inventory(params, theta_of=theta_of)
    theta_bar = np.concatenate([c2_bar, c3_bar]) if theta_of == "c2c3" \
        else c3_bar
    return Preset(name=name, family="inventory", problem=prob, unc=unc,
                  theta_bar=theta_bar, radius=radius,
                  extra={"params": params})


def _uc_preset(name, gamma, seed):
    data = load_uc_data()
    prob, unc = make_unit_commitment(data, gamma)
    return Preset(name=name, family="unit_commitment", problem=prob, unc=unc,
                  theta_bar=data.b.copy(), radius=1.5, extra={"data": data})


PRESETS = {
    "facility-3x3": lambda seed=0: _facility_preset(
        "facility-3x3", 3, 16.0, "c", 1.0, None, None, seed),
    "facility-7x7-g38": lambda seed=0: _facility_preset(
        "facility-7x7-g38", 7, 38.0, "f", 3.0, 2.0, 12.0, seed),
    "inventory-25-g10": lambda seed=0: _inventory_preset(
        "inventory-25-g10", 25, 10.0, "c2c3", 2.0, seed),
    "uc-10x24-g2": lambda seed=0: _uc_preset("uc-10x24-g2", 2.0, seed),
}


def load_preset(name, seed=0):
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; available: "
                         + ", ".join(sorted(PRESETS)))
    return PRESETS[name](seed)

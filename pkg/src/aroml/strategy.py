"""Strategies, their evaluation metrics, and reward-matrix construction.

A strategy is what the learned models predict: the here-and-now decision
itself, the pair (decision, worst-case scenario), or the pair (decision,
tight-constraint set) that reduces the wait-and-see LP. Evaluation follows
the suboptimality definitions used to score predictions, with an explicit
penalty M for infeasible ones.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass

import numpy as np

from .ccg import evaluate_q
from .errors import ConsistencyError, InputError
from .lp import LE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp
from .model import build_det, det_solve

HERE_AND_NOW = "here_and_now"
WORST_CASE = "worst_case"
WAIT_AND_SEE = "wait_and_see"

TIGHT_TOL = 1e-6
ACCURACY_TOL = 1e-4
PENALTY_M = 1_000_000.0
D_ROUND = 6  # decimals for canonical scenario rounding


@dataclass(frozen=True)
class Strategy:
    """Tagged union; frozen so instances are usable as dict keys via key()."""

    kind: str
    x: tuple          # binary components as ints
    d: tuple = None   # worst-case scenario, rounded (worst_case only)
    tight: tuple = None  # sorted constraint indices (wait_and_see only)

    def __post_init__(self):
        if self.kind not in (HERE_AND_NOW, WORST_CASE, WAIT_AND_SEE):
            raise InputError(f"unknown strategy kind {self.kind!r}")
        if self.kind == WORST_CASE and self.d is None:
            raise InputError("worst_case strategy needs a scenario")
        if self.kind == WAIT_AND_SEE and self.tight is None:
            raise InputError("wait_and_see strategy needs a tight set")

    @classmethod
    def here_and_now(cls, x):
        return cls(kind=HERE_AND_NOW, x=_canon_x(x))

    @classmethod
    def worst_case(cls, x, d):
        d = tuple(round(float(v), D_ROUND) + 0.0 for v in np.asarray(d))
        return cls(kind=WORST_CASE, x=_canon_x(x), d=d)

    @classmethod
    def wait_and_see(cls, x, tight):
        return cls(kind=WAIT_AND_SEE, x=_canon_x(x),
                   tight=tuple(sorted(int(j) for j in set(tight))))

    def key(self):
        """Canonical JSON form: the dedup key and the tree label."""
        obj = {"kind": self.kind, "x": list(self.x)}
        if self.kind == WORST_CASE:
            obj["d"] = list(self.d)
        elif self.kind == WAIT_AND_SEE:
            obj["tight"] = list(self.tight)
        return json.dumps(obj, separators=(",", ":"))

    @classmethod
    def from_key(cls, key):
        obj = json.loads(key)
        kind = obj["kind"]
        if kind == HERE_AND_NOW:
            return cls.here_and_now(obj["x"])
        if kind == WORST_CASE:
            return cls.worst_case(obj["x"], obj["d"])
        return cls.wait_and_see(obj["x"], obj["tight"])

    @property
    def x_arr(self):
        return np.array(self.x, dtype=float)


def _canon_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x - np.round(x)) > 1e-6):
        raise InputError("strategy x must be binary")
    return tuple(int(v) for v in np.round(x))


@dataclass
class EvalOutcome:
    feasible: bool
    suboptimality: float = None

    def __post_init__(self):
        if self.feasible != (self.suboptimality is not None):
            raise InputError("suboptimality present iff feasible")


def is_accurate(outcome, tol=ACCURACY_TOL):
    return outcome.feasible and outcome.suboptimality < tol


def extract_tight(p, theta, x, d, y, tol=TIGHT_TOL):
    """Indices of rows of Det(theta, x, d) active at y (relative tol)."""
    lhs = p.A_map(d, theta) @ np.asarray(x, dtype=float) + \
        p.B_map(theta=theta) @ np.asarray(y, dtype=float)
    g = p.g_map(d, theta)
    return tuple(int(j) for j in
                 np.flatnonzero(np.abs(lhs - g) <= tol * (1.0 + np.abs(g))))


class QCache:
    """Memoizes evaluate_q per (instance tag, x) with deterministic seeding.

    The alternating-direction heuristic consumes randomness for its starting
    scenarios; seeding from (base seed, tag, x) keeps results reproducible
    no matter the order in which reward-matrix entries are computed.
    """

    def __init__(self, p, unc, cfg, seed=0):
        self.p = p
        self.unc = unc
        self.cfg = cfg
        self.seed = seed
        self._store = {}

    def q(self, theta, x, tag=0):
        x = np.round(np.asarray(x, dtype=float))
        key = (int(tag), x.tobytes())
        if key not in self._store:
            rng = np.random.default_rng(
                [self.seed, int(tag), zlib.crc32(x.tobytes())])
            self._store[key] = evaluate_q(self.p, theta, self.unc, x,
                                          self.cfg, rng)
        return self._store[key]


def _sub_clamp(sub, cfg):
    """The CCG reference is itself a heuristic, loose by about eps1 + eps2;
    mildly negative suboptimality is legitimate noise, anything worse means
    the cached reference is broken."""
    window = max(1e-6, 2.0 * (cfg.eps1 + cfg.eps2))
    if sub < -window:
        raise ConsistencyError(
            f"suboptimality {sub:.3e} below the reference tolerance window")
    return max(sub, 0.0)


def eval_here_and_now(p, theta, unc, x_hat, ref_q, cfg, cache, tag=0):
    """sub(x) = (Q(x) - Q(x*)) / |Q(x*)|; infeasible when Q(x) is infinite."""
    q, _ = cache.q(theta, x_hat, tag)
    if not np.isfinite(q):
        return EvalOutcome(feasible=False)
    if ref_q == 0.0:
        raise InputError("reference objective is zero; suboptimality undefined")
    sub = (q - ref_q) / abs(ref_q)
    return EvalOutcome(feasible=True, suboptimality=_sub_clamp(sub, cfg))


def eval_worst_case(p, theta, unc, x_hat, d_hat, ref_q, cfg, cache, tag=0):
    """max of sub(x) and (Q(x) - V(theta, x, d')) / |Q(x)|."""
    base = eval_here_and_now(p, theta, unc, x_hat, ref_q, cfg, cache, tag)
    if not base.feasible:
        return base
    q, _ = cache.q(theta, x_hat, tag)
    if q == 0.0:
        raise InputError("Q(x) is zero; scenario suboptimality undefined")
    v, _ = det_solve(p, theta, np.asarray(x_hat, dtype=float),
                     np.asarray(d_hat, dtype=float))
    if not np.isfinite(v):
        return EvalOutcome(feasible=False)
    sub = max(base.suboptimality, _sub_clamp((q - v) / abs(q), cfg))
    return EvalOutcome(feasible=True, suboptimality=sub)


def eval_wait_and_see(p, theta, unc, x_hat, tight, d_hat, ref_q, cfg, cache,
                      tag=0):
    """Solve Det restricted to the predicted tight rows; the candidate y is
    only accepted if it satisfies the full row set. Score is the max of the
    here-and-now part and ((c.x + b.y) - V) / V."""
    base = eval_here_and_now(p, theta, unc, x_hat, ref_q, cfg, cache, tag)
    if not base.feasible:
        return base
    x_hat = np.asarray(x_hat, dtype=float)
    d_hat = np.asarray(d_hat, dtype=float)
    full = build_det(p, theta, x_hat, d_hat)
    tight = sorted(set(int(j) for j in tight))
    if any(j < 0 or j >= p.m for j in tight):
        raise InputError("tight index out of range")
    reduced = LinearProgram(c=full.c, A=full.A[tight].reshape(len(tight), p.n_y),
                            senses=[LE] * len(tight), rhs=full.rhs[tight],
                            lo=full.lo, hi=full.hi)
    rsol = solve_lp(reduced)
    if rsol.status != OPTIMAL:
        # unbounded: the dropped rows held the binding structure; infeasible
        # reduction means even the kept rows conflict
        return EvalOutcome(feasible=False)
    y = rsol.x
    viol = full.A @ y - full.rhs
    if np.any(viol > TIGHT_TOL * (1.0 + np.abs(full.rhs))):
        return EvalOutcome(feasible=False)
    v, _ = det_solve(p, theta, x_hat, d_hat)
    if not np.isfinite(v):
        return EvalOutcome(feasible=False)
    if v == 0.0:
        raise InputError("V(theta, x, d) is zero; suboptimality undefined")
    cand = p.first_stage_cost(theta, x_hat, d_hat) + float(full.c @ y)
    sub = max(base.suboptimality, _sub_clamp((cand - v) / v, cfg))
    return EvalOutcome(feasible=True, suboptimality=sub)


@dataclass
class InstanceRef:
    """What evaluation needs to know about one training/test instance."""

    theta: np.ndarray
    dbar: np.ndarray      # the nominal scenario the instance was built with
    ref_q: float          # cached Q(x*) from the instance's own CCG run
    tag: int = 0          # stable instance id for deterministic seeding


@dataclass
class RewardMatrix:
    entries: np.ndarray   # N x Q
    strategies: list      # Q Strategy objects
    penalty: float = PENALTY_M


def evaluate_strategy(p, unc, inst, strat, cfg, cache):
    """Dispatch on strategy kind; returns an EvalOutcome."""
    if strat.kind == HERE_AND_NOW:
        return eval_here_and_now(p, inst.theta, unc, strat.x_arr, inst.ref_q,
                                 cfg, cache, inst.tag)
    if strat.kind == WORST_CASE:
        return eval_worst_case(p, inst.theta, unc, strat.x_arr,
                               np.array(strat.d), inst.ref_q, cfg, cache,
                               inst.tag)
    return eval_wait_and_see(p, inst.theta, unc, strat.x_arr, strat.tight,
                             inst.dbar, inst.ref_q, cfg, cache, inst.tag)


def build_reward_matrix(p, unc, instances, strategies, cfg, cache=None,
                        penalty=PENALTY_M):
    """entries[i, j] = suboptimality of strategy j on instance i, or the
    penalty M when the combination is infeasible."""
    if not strategies:
        raise InputError("reward matrix needs at least one strategy")
    kinds = {s.kind for s in strategies}
    if len(kinds) > 1:
        raise InputError("all strategies in one matrix must share a kind")
    cache = cache or QCache(p, unc, cfg)
    R = np.empty((len(instances), len(strategies)))
    for i, inst in enumerate(instances):
        for j, s in enumerate(strategies):
            out = evaluate_strategy(p, unc, inst, s, cfg, cache)
            R[i, j] = out.suboptimality if out.feasible else penalty
    return RewardMatrix(entries=R, strategies=list(strategies),
                        penalty=penalty)

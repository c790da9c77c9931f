"""End-to-end pipeline: dataset generation (Phase 1), tree training
(Phase 2), prediction with k-candidate selection (Phase 3), and the
experiment harness that produces the accuracy/infeasibility/speed-up report.

Timing note: the Phase-3 clock covers prediction, candidate selection, and
materializing the deployable decision. The reference value and the
suboptimality bookkeeping against it are offline reporting, not part of the
online path, and are excluded from the t_ratio numerator.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .ccg import CcgConfig, evaluate_q, solve_ccg
from .errors import AromlError, ConsistencyError, InputError
from .milp import DEFAULT_GAP, RELAXED_GAP
from .model import det_solve, sample_ball, sample_polyhedron
from .strategy import (InstanceRef, QCache, RewardMatrix, Strategy,
                       build_reward_matrix, eval_here_and_now,
                       eval_wait_and_see, eval_worst_case, extract_tight,
                       is_accurate)
from .trees import (CLASSIFIER, PRESCRIPTIVE, _val_split,
                    partition_strategies, train_classifier,
                    train_prescriptive, training_objective)

DEFAULT_PROBES = 100
MAX_FAILURE_FRACTION = 0.01
TARGETS = ("s_x", "s_d", "s_y")


@dataclass
class ToleranceProfile:
    """Named (phase-1, evaluation) tolerance pairs."""

    name: str
    phase1: CcgConfig
    evaluation: CcgConfig


def tolerance_profile(name):
    if name == "default":
        cfg = CcgConfig(eps1=1e-3, eps2=1e-3, mip_gap=DEFAULT_GAP)
        return ToleranceProfile(name=name, phase1=cfg, evaluation=cfg)
    if name == "relaxed":
        return ToleranceProfile(
            name=name,
            phase1=CcgConfig(eps1=0.05, eps2=0.01, mip_gap=RELAXED_GAP),
            evaluation=CcgConfig(eps1=1e-3, eps2=1e-3, mip_gap=DEFAULT_GAP))
    raise InputError(f"unknown tolerance profile {name!r}")


@dataclass
class TrainingRecord:
    theta: np.ndarray
    d: np.ndarray          # scenario sampled for the wait-and-see target
    x_star: np.ndarray
    d_star: np.ndarray     # worst-case scenario from the solve
    tau_y: tuple
    q: float               # reference objective of this instance
    solve_time: float = 0.0
    warm_probe: bool = False

    def to_json(self):
        # solve_time is timing data, kept out of the dataset bytes
        return {"theta": self.theta.tolist(), "d": self.d.tolist(),
                "x_star": self.x_star.tolist(),
                "d_star": self.d_star.tolist(),
                "tau_y": list(self.tau_y), "q": self.q,
                "warm_probe": self.warm_probe}

    @classmethod
    def from_json(cls, obj):
        return cls(theta=np.array(obj["theta"], dtype=float),
                   d=np.array(obj["d"], dtype=float),
                   x_star=np.array(obj["x_star"], dtype=float),
                   d_star=np.array(obj["d_star"], dtype=float),
                   tau_y=tuple(obj["tau_y"]), q=float(obj["q"]),
                   warm_probe=bool(obj.get("warm_probe", False)))

    def strategy(self, target):
        if target == "s_x":
            return Strategy.here_and_now(self.x_star)
        if target == "s_d":
            return Strategy.worst_case(self.x_star, self.d_star)
        if target == "s_y":
            return Strategy.wait_and_see(self.x_star, self.tau_y)
        raise InputError(f"unknown target {target!r}")


def write_dataset(path, records):
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec.to_json()) + "\n")


def read_dataset(path):
    with open(path) as f:
        return [TrainingRecord.from_json(json.loads(line))
                for line in f if line.strip()]


def _solve_one(p, unc, theta, cfg, seed, sample_seed):
    """One Phase-1 instance: CCG solve plus the sampled-scenario tight set."""
    t0 = time.perf_counter()
    res = solve_ccg(p, theta, unc, cfg, rng=np.random.default_rng(seed))
    elapsed = time.perf_counter() - t0
    d = sample_polyhedron(unc, np.random.default_rng(sample_seed))
    v, sol = det_solve(p, theta, res.x, d)
    if not np.isfinite(v):
        raise ConsistencyError("robust decision infeasible at a sampled "
                               "scenario")
    tau = extract_tight(p, theta, res.x, d, sol.x)
    return TrainingRecord(theta=np.asarray(theta, dtype=float),
                          d=np.asarray(d, dtype=float),
                          x_star=np.asarray(res.x, dtype=float),
                          d_star=np.asarray(res.d, dtype=float),
                          tau_y=tuple(tau), q=res.objective,
                          solve_time=elapsed)


def _instance_seeds(seed, i):
    ss = np.random.SeedSequence([seed, i])
    a, b, c = ss.generate_state(3)
    return int(a), int(b), int(c)


def generate_dataset(p, unc, theta_bar, r, n, cfg, seed, initial_x=None):
    """Phase 1: n instances theta_i ~ B(theta_bar, r), each solved from
    scratch (optionally warm started at initial_x). Raises when more than
    MAX_FAILURE_FRACTION of the instances fail to solve."""
    if n < 1:
        raise InputError("need at least one instance")
    records, failures = [], []
    for i in range(n):
        th_seed, solve_seed, d_seed = _instance_seeds(seed, i)
        theta = sample_ball(theta_bar, r, np.random.default_rng(th_seed))
        run_cfg = cfg if initial_x is None else \
            CcgConfig(**{**cfg.__dict__, "initial_x": initial_x})
        try:
            records.append(_solve_one(p, unc, theta, run_cfg, solve_seed,
                                      d_seed))
        except AromlError as e:
            failures.append((i, str(e)))
    if len(failures) > MAX_FAILURE_FRACTION * n:
        raise AromlError(
            f"{len(failures)}/{n} instances failed in phase 1; first: "
            f"{failures[0][1]}")
    return records


def warm_start_x0(p, unc, theta_bar, r, cfg, seed, n_probe=DEFAULT_PROBES):
    """Modal optimal x over n_probe probe solves; ties go to the
    lexicographically smallest bit vector."""
    if n_probe < 1:
        raise InputError("need at least one probe")
    counts = {}
    ok = 0
    for i in range(n_probe):
        th_seed, solve_seed, _ = _instance_seeds(seed, i)
        theta = sample_ball(theta_bar, r, np.random.default_rng(th_seed))
        try:
            res = solve_ccg(p, theta, unc, cfg,
                            rng=np.random.default_rng(solve_seed))
        except AromlError:
            continue
        ok += 1
        key = tuple(int(round(v)) for v in res.x)
        counts[key] = counts.get(key, 0) + 1
    if not ok:
        raise AromlError("every warm-start probe failed")
    best = max(counts.items(), key=lambda kv: (kv[1], tuple(-b for b in kv[0])))
    return np.array(best[0], dtype=float)


def _dedup_strategies(labels):
    """Distinct strategies in first-occurrence order."""
    seen, out = set(), []
    for s in labels:
        k = s.key()
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


def _plan_contrasts(theta, xs):
    """theta . (x_a - x_b) for every strategy pair a < b.

    When theta scales first-stage costs, the decision boundary between two
    candidate plans is exactly such a hyperplane, which axis-aligned splits
    on theta coordinates cannot express for plans differing in several
    components. Only meaningful when theta and x share a dimension."""
    proj = xs @ np.asarray(theta, dtype=float)
    iu = np.triu_indices(xs.shape[0], k=1)
    return (proj[:, None] - proj[None, :])[iu]


def _train_prescriptive_target(p, unc, records, target, labels, X, eval_cfg,
                               cache, seed, kwargs):
    """Reward-matrix tree for one target; for the wait-and-see target the
    scenario features get the same audition as in the classifier path, scored
    by realized holdout reward instead of label accuracy."""
    strategies = _dedup_strategies(labels)
    instances = [InstanceRef(theta=rec.theta, dbar=rec.d, ref_q=rec.q, tag=i)
                 for i, rec in enumerate(records)]
    xs = np.array([s.x for s in strategies], dtype=float)
    contrasts = xs.shape[0] >= 2 and \
        xs.shape[1] == records[0].theta.shape[0]
    if contrasts:
        X = np.hstack([X, np.array([_plan_contrasts(rec.theta, xs)
                                    for rec in records])])
    t0 = time.perf_counter()
    rewards = build_reward_matrix(p, unc, instances, strategies, eval_cfg,
                                  cache=cache)
    reward_seconds = time.perf_counter() - t0
    model = train_prescriptive(X, rewards, seed=seed, **kwargs)
    model.meta["reward_matrix_seconds"] = reward_seconds
    model.meta["plan_contrasts"] = contrasts
    if target != "s_y":
        return model
    model.meta["scenario_features"] = True
    X_th = np.array([_augment(rec.theta) for rec in records])
    if contrasts:
        X_th = np.hstack([X_th, np.array([_plan_contrasts(rec.theta, xs)
                                          for rec in records])])
    tr, va = _val_split(len(records), seed + 3)
    R_tr = RewardMatrix(entries=rewards.entries[tr],
                        strategies=rewards.strategies)
    obj_d = training_objective(
        train_prescriptive(X[tr], R_tr, seed=seed, **kwargs),
        X[va], rewards.entries[va])
    obj_th = training_objective(
        train_prescriptive(X_th[tr], R_tr, seed=seed, **kwargs),
        X_th[va], rewards.entries[va])
    if obj_th < obj_d:
        model = train_prescriptive(X_th, rewards, seed=seed, **kwargs)
        model.meta["scenario_features"] = False
        model.meta["reward_matrix_seconds"] = reward_seconds
        model.meta["plan_contrasts"] = contrasts
    return model


def train_models(records, targets=TARGETS, depth_grid=None, seed=0,
                 partition_k=None, learner=CLASSIFIER, p=None, unc=None,
                 eval_cfg=None):
    """Phase 2: one tree per target over theta features (theta + scenario
    for the wait-and-see target). The default learner is the label
    classifier; the prescriptive learner trains on a reward matrix instead
    and needs the problem, uncertainty set, and an evaluation config to
    build it. Returns {target: model} plus the partition metadata when
    wait-and-see labels were merged."""
    kwargs = {} if depth_grid is None else {"depth_grid": depth_grid}
    if learner not in (CLASSIFIER, PRESCRIPTIVE):
        raise InputError(f"unknown learner {learner!r}")
    cache = None
    if learner == PRESCRIPTIVE:
        if p is None or unc is None or eval_cfg is None:
            raise InputError("prescriptive training needs the problem, the "
                             "uncertainty set, and an evaluation config")
        # one cache across targets: the here-and-now component of every
        # reward entry reuses the same Q evaluations
        cache = QCache(p, unc, eval_cfg, seed=seed + 29)
    out = {}
    partition = None
    for target in targets:
        labels = [rec.strategy(target) for rec in records]
        if target == "s_y" and partition_k is not None:
            samples = [(tuple(rec.x_star), rec.tau_y) for rec in records]
            partition, rewritten = partition_strategies(
                samples, K=partition_k)
            labels = [Strategy.wait_and_see(x, tight)
                      for (x, _), (_, tight) in zip(samples, rewritten)]
        X = np.array([_features(target, rec.theta,
                                rec.d if target == "s_y" else None)
                      for rec in records])
        if learner == PRESCRIPTIVE:
            out[target] = _train_prescriptive_target(
                p, unc, records, target, labels, X, eval_cfg, cache, seed,
                kwargs)
            continue
        model = train_classifier(X, labels, seed=seed, **kwargs)
        if target == "s_y":
            model.meta["scenario_features"] = True
            # when the tight sets barely depend on the scenario (e.g. after
            # a coarse partition rewrite), the d coordinates are pure split
            # noise -- keep them only if they earn their validation keep
            X_th = np.array([_augment(rec.theta) for rec in records])
            alt = train_classifier(X_th, labels, seed=seed, **kwargs)
            if alt.meta["val_accuracy"] > model.meta["val_accuracy"]:
                alt.meta["scenario_features"] = False
                model = alt
        out[target] = model
    return out, partition


@dataclass
class Phase3Result:
    strategy: Strategy
    outcome: object
    wall: float           # online seconds: predict + select + decide
    candidates: int


AUGMENT_CAP = 32


def _augment(theta):
    """Append pairwise coordinate differences to theta.

    Strategy boundaries are driven by cost comparisons between
    alternatives, i.e. hyperplanes along theta_i - theta_j directions that
    axis-aligned splits cannot express in the raw coordinates. Skipped for
    wide parameter vectors, where the quadratic blow-up is not worth it.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    if n > AUGMENT_CAP:
        return theta
    iu = np.triu_indices(n, k=1)
    return np.concatenate([theta, (theta[:, None] - theta[None, :])[iu]])


def _features(target, theta, d_hat):
    if target == "s_y":
        return np.concatenate([_augment(theta), d_hat])
    return _augment(theta)


def _evaluate_candidate(p, unc, target, s, theta, d_hat, ref_q, cfg, cache,
                        tag):
    x_hat = np.array(s.x, dtype=float)
    if target == "s_x":
        return eval_here_and_now(p, theta, unc, x_hat, ref_q, cfg, cache,
                                 tag=tag)
    if target == "s_d":
        return eval_worst_case(p, theta, unc, x_hat,
                               np.array(s.d, dtype=float), ref_q, cfg,
                               cache, tag=tag)
    return eval_wait_and_see(p, theta, unc, x_hat, s.tight, d_hat, ref_q,
                             cfg, cache, tag=tag)


def run_phase3(p, unc, models, target, theta, d_hat, k, ref_q, cfg, cache,
               tag=0):
    """Phase 3 for one test instance and one target.

    Predicts the top-k strategies; with one candidate the clock stops at the
    prediction (the decision is already deployable), with several it also
    covers evaluating them to pick the feasible one with the smallest
    suboptimality (ties by prediction rank).
    """
    model = models[target]
    t0 = time.perf_counter()
    if target == "s_y" and not model.meta.get("scenario_features", True):
        feat = _augment(theta)
    else:
        feat = _features(target, theta, d_hat)
    if model.meta.get("plan_contrasts"):
        xs = np.array([Strategy.from_key(key).x
                       for key in model.label_table], dtype=float)
        feat = np.concatenate([feat, _plan_contrasts(theta, xs)])
    cands = model.predict(feat, k=k)
    chosen, out = cands[0], None
    if len(cands) > 1:
        outs = [_evaluate_candidate(p, unc, target, s, theta, d_hat, ref_q,
                                    cfg, cache, tag) for s in cands]
        scores = [o.suboptimality if o.feasible else np.inf for o in outs]
        best = int(np.argmin(scores))
        chosen, out = cands[best], outs[best]
    wall = time.perf_counter() - t0
    if out is None:
        out = _evaluate_candidate(p, unc, target, chosen, theta, d_hat,
                                  ref_q, cfg, cache, tag)
    return Phase3Result(strategy=chosen, outcome=out, wall=wall,
                        candidates=len(cands))


@dataclass
class ExperimentReport:
    rows: list            # dicts: target, k, accuracy, infeasibility, ...
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if row["accuracy"] + row["infeasibility"] > 1 + 1e-12:
                raise ConsistencyError("accuracy and infeasibility overlap")
            if row["sub_max"] < 0 or row["t_ratio"] <= 0:
                raise ConsistencyError("report row out of range")

    def to_json(self):
        return {"rows": self.rows, "meta": self.meta}

    def to_markdown(self):
        header = "| Target | k | Accuracy | Infeasibility | sub_max | |S| | N | t_ratio |"
        sep = "|" + "---|" * 8
        lines = [header, sep]
        for r in self.rows:
            lines.append(
                "| {target} | {k} | {accuracy:.4f} | {infeasibility:.4f} "
                "| {sub_max:.2e} | {n_strategies} | {n} | {t_ratio} |"
                .format(**r))
        return "\n".join(lines)


def _split(n, frac, rng):
    idx = rng.permutation(n)
    n_test = int(round(n * frac))
    return np.sort(idx[n_test:]), np.sort(idx[:n_test])


DEFAULT_CONFIG = {
    "n_instances": 200,
    "k": [1],
    "targets": list(TARGETS),
    "profile": "default",
    "seed": 0,
    "test_fraction": 0.3,
    "depth_grid": None,
    "partition_k": None,
    "learner": CLASSIFIER,
    "warm_start": False,
    "test_radius": None,     # distributional shift: overrides r on test draws
    "n_workers": 1,
}


def validate_config(config):
    cfg = dict(DEFAULT_CONFIG)
    problems = []
    unknown = set(config) - set(DEFAULT_CONFIG) - {"preset", "problem_file",
                                                   "radius", "theta_bar"}
    if unknown:
        problems.append(f"unknown keys: {sorted(unknown)}")
    cfg.update(config)
    if "preset" not in config and "problem_file" not in config:
        problems.append("config needs a 'preset' or a 'problem_file'")
    if cfg["n_instances"] < 2:
        problems.append("n_instances must be at least 2")
    if not cfg["k"] or any(int(k) < 1 for k in cfg["k"]):
        problems.append("k must be a non-empty list of positive integers")
    for t in cfg["targets"]:
        if t not in TARGETS:
            problems.append(f"unknown target {t!r}")
    if not 0 < cfg["test_fraction"] < 1:
        problems.append("test_fraction must lie in (0, 1)")
    if cfg["learner"] not in (CLASSIFIER, PRESCRIPTIVE):
        problems.append(f"unknown learner {cfg['learner']!r}")
    try:
        tolerance_profile(cfg["profile"])
    except InputError as e:
        problems.append(str(e))
    if problems:
        raise InputError("; ".join(problems))
    return cfg


def run_experiment(p, unc, theta_bar, r, config):
    """Full harness: Phase 1 on the training share, Phase 2 training,
    CCG-on-test references, Phase 3 on every (target, k) pair."""
    cfg = validate_config(config)
    profile = tolerance_profile(cfg["profile"])
    seed = int(cfg["seed"])
    n = int(cfg["n_instances"])

    initial_x = None
    if cfg["warm_start"]:
        initial_x = warm_start_x0(p, unc, theta_bar, r, profile.phase1,
                                  seed=seed + 101)
    records = generate_dataset(p, unc, theta_bar, r, n, profile.phase1,
                               seed=seed, initial_x=initial_x)
    train_idx, test_idx = _split(len(records), cfg["test_fraction"],
                                 np.random.default_rng(seed + 7))
    train = [records[i] for i in train_idx]
    grid = None if cfg["depth_grid"] is None else tuple(cfg["depth_grid"])
    models, partition = train_models(train, targets=cfg["targets"],
                                     depth_grid=grid, seed=seed,
                                     partition_k=cfg["partition_k"],
                                     learner=cfg["learner"], p=p, unc=unc,
                                     eval_cfg=profile.phase1)

    # test instances: fresh thetas under the (possibly shifted) radius
    r_test = r if cfg["test_radius"] is None else float(cfg["test_radius"])
    cache = QCache(p, unc, profile.evaluation, seed=seed + 13)
    tests = []
    for i in range(len(test_idx)):
        th_seed, solve_seed, d_seed = _instance_seeds(seed + 501, i)
        theta = sample_ball(theta_bar, r_test, np.random.default_rng(th_seed))
        t0 = time.perf_counter()
        res = solve_ccg(p, theta, unc, profile.evaluation,
                        rng=np.random.default_rng(solve_seed))
        ccg_wall = time.perf_counter() - t0
        d_hat = sample_polyhedron(unc, np.random.default_rng(d_seed))
        tests.append((theta, d_hat, res.objective, ccg_wall))

    rows = []
    ccg_median = float(np.median([t[3] for t in tests]))
    for target in cfg["targets"]:
        n_labels = len(models[target].label_table)
        for k in cfg["k"]:
            outs, walls = [], []
            for tag, (theta, d_hat, ref_q, _) in enumerate(tests):
                resk = run_phase3(p, unc, models, target, theta, d_hat,
                                  int(k), ref_q, profile.evaluation, cache,
                                  tag=tag)
                outs.append(resk.outcome)
                walls.append(resk.wall)
            feas = [o for o in outs if o.feasible]
            acc = sum(is_accurate(o) for o in outs) / len(outs)
            infeas = 1.0 - len(feas) / len(outs)
            sub_max = max((o.suboptimality for o in feas), default=0.0)
            t_ratio = max(1, math.ceil(ccg_median /
                                       max(float(np.median(walls)), 1e-9)))
            rows.append({"target": target, "k": int(k), "accuracy": acc,
                         "infeasibility": infeas, "sub_max": sub_max,
                         "n_strategies": n_labels, "n": n,
                         "t_ratio": t_ratio})
    meta = {"seed": seed, "profile": profile.name, "n_train": len(train),
            "n_test": len(tests), "partition_k": cfg["partition_k"],
            "learner": cfg["learner"],
            "warm_start": bool(cfg["warm_start"]),
            "median_ccg_seconds": ccg_median,
            "depths": {t: models[t].meta.get("depth") for t in cfg["targets"]}}
    return ExperimentReport(rows=rows, meta=meta), records, models, tests

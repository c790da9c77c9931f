"""Command-line front door for batch use.

Subcommands map onto the pipeline phases: ``solve`` runs the full
column-and-constraint generation loop on one instance, ``generate`` /
``train`` / ``predict`` cover the three experiment phases individually, and
``evaluate`` (alias ``benchmark``) runs the end-to-end harness.

Every command writes its primary outputs plus a ``manifest.json`` naming the
command, the config hash and the seed; all timing fields live in a sibling
``timings.json`` so the primary outputs are byte-identical across reruns
with the same inputs and seed.

Exit codes: 0 ok, 2 input error, 3 model infeasible, 4 resource budget,
5 internal consistency.
"""

import argparse
import hashlib
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .ccg import solve_ccg
from .errors import AromlError, InputError
from .model import load_instance, sample_polyhedron
from .pipeline import (TARGETS, generate_dataset, read_dataset,
                       run_experiment, run_phase3, tolerance_profile,
                       train_models, validate_config, warm_start_x0)
from .problems import load_preset
from .strategy import QCache, is_accurate
from .trees import TreeModel

SEED_ENV = "AROML_SEED"


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _read_json(path, what):
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise InputError(f"cannot read {what} file {path}: {e.strerror}")
    try:
        return json.loads(raw), raw
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {what} file {path}: {e}")


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _load_problem(args, seed):
    """Resolve (problem, unc, theta_bar, radius) from a preset name or an
    instance file plus an optional theta file."""
    if getattr(args, "preset", None):
        pre = load_preset(args.preset, seed=seed)
        prob, unc = pre.problem, pre.unc
        theta_bar, radius = pre.theta_bar, pre.radius
    elif getattr(args, "problem", None):
        prob, unc = load_instance(args.problem)
        theta_bar, radius = np.zeros(prob.n_theta), 1.0
    else:
        raise InputError("need --preset or --problem")
    if getattr(args, "theta", None):
        obj, _ = _read_json(args.theta, "theta")
        theta_bar = np.asarray(obj, dtype=float)
        if theta_bar.shape != (prob.n_theta,):
            raise InputError(f"theta file has {theta_bar.size} entries, "
                             f"problem expects {prob.n_theta}")
    return prob, unc, theta_bar, radius


def _emit(out_dir, command, seed, primary, timings, config_path=None,
          config_bytes=None):
    """Write all primary outputs, the manifest and the timings file.

    Content is rendered before anything touches the disk so a failure never
    leaves partial outputs behind.
    """
    rendered = {name: body for name, body in primary.items()}
    digest = hashlib.sha256(config_bytes or b"").hexdigest()
    manifest = {"command": command, "config_path": config_path,
                "config_sha256": digest, "seed": seed,
                "version": __version__,
                "outputs": sorted(rendered)}
    rendered["manifest.json"] = _dumps(manifest)
    rendered["timings.json"] = _dumps(timings)
    os.makedirs(out_dir, exist_ok=True)
    for name, body in rendered.items():
        with open(os.path.join(out_dir, name), "w") as f:
            f.write(body)


def cmd_solve(args):
    seed = args.seed
    prob, unc, theta, _ = _load_problem(args, seed)
    profile = tolerance_profile(args.profile)
    t0 = time.perf_counter()
    res = solve_ccg(prob, theta, unc, profile.phase1,
                    rng=np.random.default_rng(seed))
    wall_ms = 1000.0 * (time.perf_counter() - t0)
    solution = {"x": [float(v) for v in res.x],
                "d_worst": [float(v) for v in res.d],
                "objective": res.objective,
                "LB": res.lower_bound,
                "iterations": res.iterations}
    _emit(args.out, "solve", seed, {"solution.json": _dumps(solution)},
          {"wall_ms": wall_ms})
    return 0


def _resolved_config(args):
    obj, raw = _read_json(args.config, "config")
    if not isinstance(obj, dict):
        raise InputError(f"config file {args.config} must hold a JSON object")
    if args.seed is not None:
        obj["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        obj["n_workers"] = args.workers
    cfg = validate_config(obj)
    return obj, cfg, raw


def cmd_generate(args):
    obj, cfg, raw = _resolved_config(args)
    seed = int(cfg["seed"])
    prob, unc, theta_bar, radius = _load_problem(
        argparse.Namespace(preset=obj.get("preset"),
                           problem=obj.get("problem_file"), theta=None), seed)
    radius = float(obj.get("radius", radius))
    profile = tolerance_profile(cfg["profile"])
    t0 = time.perf_counter()
    initial_x = None
    if cfg["warm_start"]:
        initial_x = warm_start_x0(prob, unc, theta_bar, radius,
                                  profile.phase1, seed=seed + 101)
    records = generate_dataset(prob, unc, theta_bar, radius,
                               int(cfg["n_instances"]), profile.phase1,
                               seed=seed, initial_x=initial_x)
    total = time.perf_counter() - t0
    buf = io.StringIO()
    for rec in records:
        buf.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
    _emit(args.out, "generate", seed, {"dataset.jsonl": buf.getvalue()},
          {"generate_seconds": total,
           "solve_seconds": sum(r.solve_time for r in records)},
          config_path=args.config, config_bytes=raw)
    return 0


def cmd_train(args):
    obj, cfg, raw = _resolved_config(args)
    seed = int(cfg["seed"])
    records = read_dataset(args.dataset)
    grid = None if cfg["depth_grid"] is None else tuple(cfg["depth_grid"])
    extra = {}
    if cfg["learner"] == "prescriptive":
        prob, unc, theta_bar, radius = _load_problem(
            argparse.Namespace(preset=obj.get("preset"),
                               problem=obj.get("problem_file"), theta=None),
            seed)
        profile = tolerance_profile(cfg["profile"])
        extra = {"p": prob, "unc": unc, "eval_cfg": profile.phase1}
    t0 = time.perf_counter()
    models, partition = train_models(records, targets=cfg["targets"],
                                     depth_grid=grid, seed=seed,
                                     partition_k=cfg["partition_k"],
                                     learner=cfg["learner"], **extra)
    train_seconds = time.perf_counter() - t0
    primary = {f"{target}.json": model.dumps() + "\n"
               for target, model in models.items()}
    if partition is not None:
        primary["partition.json"] = _dumps(
            {"K": partition.K,
             "unions": [sorted(int(j) for j in u)
                        for u in partition.unions]})
    # offline-time rows; the dataset intentionally carries no wall times,
    # so the Solve row belongs to the generate step's timings file
    reward_seconds = sum(m.meta.get("reward_matrix_seconds", 0.0)
                         for m in models.values())
    _emit(args.out, "train", seed, primary,
          {"offline": {"solve_seconds": None,
                       "reward_matrix_seconds": reward_seconds,
                       "training_seconds": train_seconds - reward_seconds}},
          config_path=args.config, config_bytes=raw)
    return 0


def _load_models(models_dir, target):
    path = os.path.join(models_dir, f"{target}.json")
    if not os.path.exists(path):
        raise InputError(f"missing model file {path}")
    obj, _ = _read_json(path, "model")
    return {target: TreeModel.from_json(obj)}


def cmd_predict(args):
    seed = args.seed
    if args.target not in TARGETS:
        raise InputError(f"unknown target {args.target!r}; "
                         f"choose from {', '.join(TARGETS)}")
    prob, unc, theta, _ = _load_problem(args, seed)
    models = _load_models(args.models, args.target)
    if args.scenario:
        obj, _ = _read_json(args.scenario, "scenario")
        d_hat = np.asarray(obj, dtype=float)
    else:
        d_hat = sample_polyhedron(unc, np.random.default_rng(seed))
    profile = tolerance_profile(args.profile)
    # the reference value is needed to score the prediction
    ref = solve_ccg(prob, theta, unc, profile.evaluation,
                    rng=np.random.default_rng(seed))
    cache = QCache(prob, unc, profile.evaluation, seed=seed)
    res = run_phase3(prob, unc, models, args.target, theta, d_hat,
                     args.k, ref.objective, profile.evaluation, cache)
    out = res.outcome
    prediction = {"target": args.target, "k": args.k,
                  "strategy": res.strategy.key(),
                  "candidates": res.candidates,
                  "feasible": bool(out.feasible),
                  "suboptimality": float(out.suboptimality),
                  "accurate": bool(is_accurate(out)),
                  "reference_objective": ref.objective}
    _emit(args.out, "predict", seed, {"prediction.json": _dumps(prediction)},
          {"predict_seconds": res.wall})
    return 0


def cmd_evaluate(args):
    obj, cfg, raw = _resolved_config(args)
    seed = int(cfg["seed"])
    prob, unc, theta_bar, radius = _load_problem(
        argparse.Namespace(preset=obj.get("preset"),
                           problem=obj.get("problem_file"), theta=None), seed)
    radius = float(obj.get("radius", radius))
    t0 = time.perf_counter()
    report, records, models, tests = run_experiment(prob, unc, theta_bar,
                                                    radius, cfg)
    total = time.perf_counter() - t0
    median_ccg = report.meta.pop("median_ccg_seconds")
    _emit(args.out, args.command, seed,
          {"report.json": _dumps(report.to_json()),
           "report.md": report.to_markdown() + "\n"},
          {"total_seconds": total, "median_ccg_seconds": median_ccg},
          config_path=args.config, config_bytes=raw)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aroml",
        description="Two-stage adaptive robust optimization with learned "
                    "strategy prediction.")
    parser.add_argument("--version", action="version",
                        version=f"aroml {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=False):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help=f"seed (default: ${SEED_ENV} or 0)")
        if needs_config:
            p.add_argument("--config", required=True,
                           help="JSON config file")
            p.add_argument("--workers", type=int, default=None,
                           help="worker-pool size (outputs are independent "
                            "of it)")

    p = sub.add_parser("solve", help="solve one instance end to end")
    p.add_argument("--preset", help="preset name, e.g. facility-3x3")
    p.add_argument("--problem", help="instance JSON file")
    p.add_argument("--theta", help="JSON file with the parameter vector")
    p.add_argument("--profile", default="default",
                   help="tolerance profile: default | relaxed")
    add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="phase 1: build a training dataset")
    add_common(p, needs_config=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="phase 2: fit strategy models")
    p.add_argument("--dataset", required=True, help="JSONL dataset file")
    add_common(p, needs_config=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="phase 3: score one instance")
    p.add_argument("--models", required=True, help="directory of model JSONs")
    p.add_argument("--target", required=True, help="s_x | s_d | s_y")
    p.add_argument("--preset", help="preset name")
    p.add_argument("--problem", help="instance JSON file")
    p.add_argument("--theta", help="JSON file with the parameter vector")
    p.add_argument("--scenario", help="JSON file with the observed scenario")
    p.add_argument("--k", type=int, default=1, help="top-k candidates")
    p.add_argument("--profile", default="default")
    add_common(p)
    p.set_defaults(func=cmd_predict)

    for name in ("evaluate", "benchmark"):
        p = sub.add_parser(name, help="full experiment harness")
        add_common(p, needs_config=True)
        p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except AromlError as e:
        print(f"aroml {args.command}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())

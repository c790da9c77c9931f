import json

import numpy as np
import pytest

from aroml.ccg import CcgConfig
from aroml.errors import AromlError, InputError
from aroml.pipeline import (TrainingRecord, generate_dataset, read_dataset,
                            run_experiment, run_phase3, tolerance_profile,
                            train_models, validate_config, warm_start_x0,
                            write_dataset)
from aroml.strategy import QCache, Strategy
from test_ccg import THETA, facility

CFG = CcgConfig()
R = 3.0


@pytest.fixture(scope="module")
def fam():
    prob, unc = facility(np.random.default_rng(5), budget=5.0)
    return prob, unc


@pytest.fixture(scope="module")
def records(fam):
    prob, unc = fam
    return generate_dataset(prob, unc, THETA, R, 40, CFG, seed=11)


def test_dataset_deterministic_bytes(fam, tmp_path):
    prob, unc = fam
    paths = []
    for run in range(2):
        recs = generate_dataset(prob, unc, THETA, R, 10, CFG, seed=3)
        path = tmp_path / f"ds{run}.jsonl"
        write_dataset(path, recs)
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]
    back = read_dataset(tmp_path / "ds0.jsonl")
    assert len(back) == 10
    assert back[0].tau_y == tuple(sorted(back[0].tau_y))


def test_record_self_consistency(fam, records):
    prob, unc = fam
    cache = QCache(prob, unc, CFG, seed=11)
    from aroml.strategy import (eval_here_and_now, eval_wait_and_see,
                                is_accurate)
    for tag, rec in enumerate(records[:8]):
        out = eval_here_and_now(prob, rec.theta, unc, rec.x_star, rec.q,
                                CFG, cache, tag=tag)
        assert is_accurate(out) or out.suboptimality <= 2 * (CFG.eps1 + CFG.eps2)
        ws = eval_wait_and_see(prob, rec.theta, unc, rec.x_star, rec.tau_y,
                               rec.d, rec.q, CFG, cache, tag=tag)
        assert ws.feasible


def test_generate_fails_when_instances_fail(fam):
    prob, unc = fam
    bad = CcgConfig(max_outer_iters=0)
    with pytest.raises(AromlError, match="failed in phase 1"):
        generate_dataset(prob, unc, THETA, R, 5, bad, seed=0)


def test_warm_start_modal(fam):
    prob, unc = fam
    x0 = warm_start_x0(prob, unc, THETA, 0.1, CFG, seed=2, n_probe=6)
    assert x0.shape == (2,)
    assert set(np.unique(x0)) <= {0.0, 1.0}
    with pytest.raises(InputError):
        warm_start_x0(prob, unc, THETA, 0.1, CFG, seed=2, n_probe=0)


def test_train_models_targets_and_partition(records):
    models, partition = train_models(records)
    assert set(models) == {"s_x", "s_d", "s_y"}
    assert partition is None
    assert models["s_y"].meta["n_features"] == 1 + 2  # theta plus scenario
    models2, part2 = train_models(records, partition_k=1)
    assert part2 is not None and part2.K == 1
    tights = {Strategy.from_key(key).tight
              for key in models2["s_y"].label_table}
    assert len(tights) == 1  # every label carries the single merged union


def test_phase3_topk_never_worse(fam, records):
    prob, unc = fam
    models, _ = train_models(records)
    cache = QCache(prob, unc, CFG, seed=77)
    rec = records[0]
    subs = {}
    for k in (1, 3):
        for target in ("s_x", "s_d", "s_y"):
            res = run_phase3(prob, unc, models, target, rec.theta, rec.d, k,
                             rec.q, CFG, cache, tag=900)
            if res.outcome.feasible:
                subs[(target, k)] = res.outcome.suboptimality
    for target in ("s_x", "s_d", "s_y"):
        if (target, 1) in subs and (target, 3) in subs:
            assert subs[(target, 3)] <= subs[(target, 1)] + 1e-12


def test_phase3_single_strategy_model(fam, records):
    prob, unc = fam
    rec = records[0]
    clones = [rec] * 6
    models, _ = train_models(clones)
    cache = QCache(prob, unc, CFG, seed=5)
    res = run_phase3(prob, unc, models, "s_x", rec.theta, rec.d, 1, rec.q,
                     CFG, cache, tag=1)
    assert res.strategy == Strategy.here_and_now(rec.x_star)
    assert res.wall >= 0.0


def test_validate_config_exhaustive():
    with pytest.raises(InputError) as e:
        validate_config({"n_instances": 1, "k": [], "targets": ["bogus"],
                         "profile": "nope", "test_fraction": 2.0})
    msg = str(e.value)
    for frag in ("preset", "n_instances", "k must", "bogus",
                 "test_fraction", "profile"):
        assert frag in msg


def test_tolerance_profiles():
    d = tolerance_profile("default")
    assert d.phase1.eps1 == 1e-3 and d.evaluation.eps2 == 1e-3
    r = tolerance_profile("relaxed")
    assert r.phase1.eps1 == 0.05 and r.phase1.eps2 == 0.01
    assert r.evaluation.eps1 == 1e-3
    with pytest.raises(InputError):
        tolerance_profile("speedy")


def test_record_json_round_trip():
    rec = TrainingRecord(theta=np.array([1.0]), d=np.array([2.0, 3.0]),
                         x_star=np.array([1.0, 0.0]),
                         d_star=np.array([2.5, 3.5]), tau_y=(0, 2), q=9.25,
                         solve_time=0.5)
    back = TrainingRecord.from_json(json.loads(json.dumps(rec.to_json())))
    assert back.q == rec.q and back.tau_y == rec.tau_y
    assert np.array_equal(back.x_star, rec.x_star)
    assert back.solve_time == 0.0  # timing never travels with the dataset


def test_run_experiment_report(fam):
    prob, unc = fam
    config = {"preset": "inline", "n_instances": 30, "k": [1, 2],
              "seed": 4, "targets": ["s_x", "s_y"]}
    report, records, models, tests = run_experiment(prob, unc, THETA, R,
                                                    config)
    assert len(report.rows) == 4
    for row in report.rows:
        assert 0.0 <= row["accuracy"] <= 1.0
        assert row["accuracy"] + row["infeasibility"] <= 1.0 + 1e-12
        assert row["t_ratio"] >= 1
        assert row["n"] == 30
    by = {(r["target"], r["k"]): r for r in report.rows}
    assert by[("s_x", 2)]["accuracy"] >= by[("s_x", 1)]["accuracy"]
    md = report.to_markdown()
    for col in ("Target", "k", "Accuracy", "Infeasibility", "sub_max",
                "|S|", "N", "t_ratio"):
        assert col in md
    assert report.meta["n_train"] + report.meta["n_test"] <= 30

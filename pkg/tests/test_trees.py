import numpy as np
import pytest

from aroml.errors import InputError
from aroml.strategy import PENALTY_M, RewardMatrix, Strategy
from aroml.trees import (PartitionSpec, TreeModel, partition_strategies,
                         subsample_strategies, train_classifier,
                         train_prescriptive, training_objective)


def lab(i):
    x = [0] * 4
    x[i] = 1
    return Strategy.here_and_now(x)


def test_single_class_is_depth_zero():
    X = np.random.default_rng(0).random((10, 3))
    model = train_classifier(X, [lab(0)] * 10)
    assert len(model.nodes) == 1
    assert model.meta["depth"] == 0
    assert model.predict(X[0], k=1) == [lab(0)]


def test_checkerboard_separable():
    # balanced 2x2 checkerboard: the first split has zero Gini gain, but
    # depth 2 still separates it perfectly
    corners = [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
    X = np.array(corners * 10)
    labels = [lab(int(x[0] < 0.5) ^ int(x[1] < 0.5)) for x in X]
    model = train_classifier(X, labels, depth_grid=(2,))
    hits = sum(model.predict(x, 1)[0] == l for x, l in zip(X, labels))
    assert hits == len(X)


def test_topk_order_and_short_list():
    # leaf counts {A:7, B:3}: k=2 gives [A, B]; k=5 gives only 2
    X = np.zeros((10, 1))
    labels = [lab(0)] * 7 + [lab(1)] * 3
    model = train_classifier(X, labels, depth_grid=(3,))
    assert model.predict([0.0], k=2) == [lab(0), lab(1)]
    assert len(model.predict([0.0], k=5)) == 2


def test_split_rule_ties_go_right():
    X = np.array([[0.0], [1.0], [2.0], [3.0]] * 5)
    labels = [lab(0), lab(0), lab(1), lab(1)] * 5
    model = train_classifier(X, labels, depth_grid=(2,))
    node = model.nodes[0]
    assert node["threshold"] == pytest.approx(1.5)
    assert model.predict([1.5], 1)[0] == lab(1)  # tie -> right branch
    assert model.predict([1.49], 1)[0] == lab(0)


def test_classifier_deterministic_serialization():
    rng = np.random.default_rng(3)
    X = rng.random((60, 3))
    labels = [lab(int(x[0] > 0.5) + 2 * int(x[2] > 0.3)) for x in X]
    a = train_classifier(X, labels, seed=7).dumps()
    b = train_classifier(X, labels, seed=7).dumps()
    assert a == b
    model = TreeModel.loads(a)
    assert model.predict(X[0], 1)[0] == \
        train_classifier(X, labels, seed=7).predict(X[0], 1)[0]


def test_feature_length_validation():
    X = np.random.default_rng(4).random((10, 2))
    model = train_classifier(X, [lab(0)] * 5 + [lab(1)] * 5)
    with pytest.raises(InputError):
        model.predict([1.0, 2.0, 3.0], 1)
    with pytest.raises(InputError):
        model.predict(X[0], k=0)


def test_prescriptive_dominant_column():
    X = np.random.default_rng(5).random((20, 2))
    R = np.full((20, 3), 5.0)
    R[:, 1] = 0.0
    rm = RewardMatrix(entries=R, strategies=[lab(0), lab(1), lab(2)])
    model = train_prescriptive(X, rm, depth_grid=(3,))
    assert len(model.nodes) == 1
    assert model.predict(X[0], 1)[0] == lab(1)


def test_prescriptive_two_regions():
    rng = np.random.default_rng(6)
    X = np.sort(rng.random(40)).reshape(-1, 1)
    R = np.full((40, 2), PENALTY_M)
    R[:20, 0] = 0.0
    R[20:, 1] = 0.0
    rm = RewardMatrix(entries=R, strategies=[lab(0), lab(1)])
    model = train_prescriptive(X, rm, depth_grid=(1, 3))
    assert training_objective(model, X, R) == pytest.approx(0.0)
    assert model.predict([X[0, 0]], 1)[0] == lab(0)
    assert model.predict([X[-1, 0]], 1)[0] == lab(1)


def test_prescriptive_objective_non_increasing_in_depth():
    rng = np.random.default_rng(7)
    X = rng.random((80, 2))
    R = rng.random((80, 4))
    rm = RewardMatrix(entries=R, strategies=[lab(i) for i in range(4)])
    objs = []
    for depth in (0, 1, 3, 6):
        nodes = []
        from aroml.trees import _grow_prescriptive
        _grow_prescriptive(X, R, np.arange(80), depth, nodes, 5)
        model = TreeModel(kind="prescriptive", nodes=nodes,
                          label_table=[s.key() for s in rm.strategies],
                          meta={"n_features": 2})
        objs.append(training_objective(model, X, R))
    assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))


def test_prescriptive_topk_by_mean_reward():
    X = np.zeros((10, 1))
    R = np.tile([3.0, 1.0, 2.0], (10, 1))
    rm = RewardMatrix(entries=R, strategies=[lab(0), lab(1), lab(2)])
    model = train_prescriptive(X, rm, depth_grid=(2,))
    assert model.predict([0.0], 3) == [lab(1), lab(2), lab(0)]


def test_subsample_keeps_most_frequent():
    strategies = [lab(i) for i in range(4)]
    counts = [2, 9, 3, 1]
    rng = np.random.default_rng(8)
    for _ in range(10):
        out = subsample_strategies(strategies, counts, 2, rng)
        assert lab(1) in out
        assert len(out) == 2
    assert subsample_strategies(strategies, counts, 10, rng) == strategies


def test_partition_paper_example():
    samples = [("x", (1,)), ("x", (2,)), ("x", (3,)), ("x", (4,))]
    spec, rewritten = partition_strategies(samples, K=3)
    # top two singletons by frequency (ties by first occurrence): {1}, {2}
    assert spec.unions[0] == (1,)
    assert spec.unions[1] == (2,)
    assert spec.unions[2] == (3, 4)
    assert [t for _, t in rewritten] == [(1,), (2,), (3, 4), (3, 4)]


def test_partition_identity_and_global():
    samples = [("x", (1, 2)), ("x", (2, 3)), ("x", (1, 2))]
    spec, rewritten = partition_strategies(samples, K=2)
    # {1,2} occurs twice -> its own cell; {2,3} merged cell
    assert rewritten[0][1] == (1, 2)
    assert rewritten[1][1] == (2, 3)
    spec1, rew1 = partition_strategies(samples, K=1)
    assert all(t == (1, 2, 3) for _, t in rew1)
    specM, rewM = partition_strategies(samples, K=2)
    with pytest.raises(InputError):
        partition_strategies(samples, K=3)
    with pytest.raises(InputError):
        partition_strategies(samples, K=0)


def test_topk_accuracy_non_decreasing():
    rng = np.random.default_rng(9)
    X = rng.random((100, 2))
    labels = [lab(int(x[0] * 2) % 3 if x[1] < 0.8 else 3) for x in X]
    model = train_classifier(X, labels)
    accs = []
    for k in (1, 2, 3, 4):
        hits = sum(l in model.predict(x, k) for x, l in zip(X, labels))
        accs.append(hits / 100)
    assert all(b >= a for a, b in zip(accs, accs[1:]))

"""Decision-tree learners for strategy prediction.

Two trainers share one tree structure: a Gini CART classifier over strategy
labels, and a prescriptive tree trained directly on a reward matrix (greedy
approximation of min sum_i R[i, z_{v(theta_i)}]). Both select their depth
from a small grid on an internal validation split and are fully
deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .strategy import Strategy

CLASSIFIER = "classifier"
PRESCRIPTIVE = "prescriptive"

DEPTH_GRID = (5, 10)
MIN_LEAF_PRESCRIPTIVE = 5
MODEL_VERSION = 1


@dataclass
class TreeModel:
    kind: str
    nodes: list          # dicts: {feature, threshold, left, right} | {leaf}
    label_table: list    # strategy id -> canonical Strategy key (JSON string)
    meta: dict = field(default_factory=dict)

    def leaf_for(self, feature):
        feature = np.asarray(feature, dtype=float)
        if feature.shape[0] != self.meta.get("n_features", feature.shape[0]):
            raise InputError("feature vector length mismatch")
        i = 0
        while "leaf" not in self.nodes[i]:
            node = self.nodes[i]
            # left iff value < threshold; ties go right
            i = node["left"] if feature[node["feature"]] < node["threshold"] \
                else node["right"]
        return self.nodes[i]["leaf"]

    def predict(self, feature, k=1):
        """Top-k strategies at the reached leaf; may return fewer than k."""
        if k < 1:
            raise InputError("k must be at least 1")
        payload = self.leaf_for(feature)
        if self.kind == CLASSIFIER:
            # counts: {label id: count}; rank by count desc, id asc
            ranked = sorted(payload.items(), key=lambda kv: (-kv[1], kv[0]))
            ids = [lid for lid, _ in ranked[:k]]
        else:
            means = np.asarray(payload, dtype=float)
            ids = list(np.lexsort((np.arange(len(means)), means))[:k])
        return [Strategy.from_key(self.label_table[int(i)]) for i in ids]

    def to_json(self):
        nodes = []
        for nd in self.nodes:
            if "leaf" in nd:
                payload = nd["leaf"]
                if self.kind == CLASSIFIER:
                    payload = {str(kk): int(vv) for kk, vv in payload.items()}
                else:
                    payload = [float(v) for v in payload]
                nodes.append({"leaf": payload})
            else:
                nodes.append({"feature": int(nd["feature"]),
                              "threshold": float(nd["threshold"]),
                              "left": int(nd["left"]),
                              "right": int(nd["right"])})
        return {"version": MODEL_VERSION, "kind": self.kind, "nodes": nodes,
                "label_table": list(self.label_table), "meta": self.meta}

    @classmethod
    def from_json(cls, obj):
        if obj.get("version") != MODEL_VERSION:
            raise InputError(f"unsupported model version {obj.get('version')}")
        nodes = []
        for nd in obj["nodes"]:
            if "leaf" in nd:
                payload = nd["leaf"]
                if obj["kind"] == CLASSIFIER:
                    payload = {int(kk): int(vv) for kk, vv in payload.items()}
                nodes.append({"leaf": payload})
            else:
                nodes.append(dict(nd))
        return cls(kind=obj["kind"], nodes=nodes,
                   label_table=list(obj["label_table"]),
                   meta=dict(obj.get("meta", {})))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, s):
        return cls.from_json(json.loads(s))


def _split_candidates(col):
    vals = np.unique(col)
    if vals.size < 2:
        return np.empty(0)
    return (vals[:-1] + vals[1:]) / 2.0


def _gini(counts):
    tot = counts.sum()
    if tot == 0:
        return 0.0
    pr = counts / tot
    return 1.0 - float(pr @ pr)


def _grow_classifier(X, y, n_labels, depth, nodes):
    counts = np.bincount(y, minlength=n_labels).astype(float)
    idx = len(nodes)
    nodes.append(None)
    if depth == 0 or np.count_nonzero(counts) <= 1:
        nodes[idx] = {"leaf": {int(l): int(c) for l, c in enumerate(counts)
                               if c > 0}}
        return idx
    n = X.shape[0]
    parent = _gini(counts) * n
    best = None  # (score, feature, threshold)
    for f in range(X.shape[1]):
        col = X[:, f]
        for t in _split_candidates(col):
            left = col < t
            nl = int(left.sum())
            if nl == 0 or nl == n:
                continue
            cl = np.bincount(y[left], minlength=n_labels).astype(float)
            cr = counts - cl
            score = _gini(cl) * nl + _gini(cr) * (n - nl)
            if best is None or score < best[0] - 1e-12:
                best = (score, f, t)
    # zero-gain splits are accepted (a balanced checkerboard needs them);
    # recursion still terminates because children are strictly smaller
    if best is None or best[0] > parent + 1e-12:
        nodes[idx] = {"leaf": {int(l): int(c) for l, c in enumerate(counts)
                               if c > 0}}
        return idx
    _, f, t = best
    left = X[:, f] < t
    li = _grow_classifier(X[left], y[left], n_labels, depth - 1, nodes)
    ri = _grow_classifier(X[~left], y[~left], n_labels, depth - 1, nodes)
    nodes[idx] = {"feature": f, "threshold": t, "left": li, "right": ri}
    return idx


def _encode_labels(labels):
    """Map canonical strategy keys to dense ids, first-occurrence order."""
    table, ids = [], []
    index = {}
    for lab in labels:
        key = lab.key() if isinstance(lab, Strategy) else str(lab)
        if key not in index:
            index[key] = len(table)
            table.append(key)
        ids.append(index[key])
    return np.array(ids), table


def _val_split(n, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    cut = max(1, int(round(0.8 * n)))
    if cut == n:
        cut = n - 1
    return perm[:cut], perm[cut:]


def train_classifier(features, labels, depth_grid=DEPTH_GRID, seed=0):
    """Gini CART with depth picked by 80/20 validation accuracy, refit on
    the full data at the chosen depth."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[0] < 2:
        raise InputError("need at least two training samples")
    y, table = _encode_labels(labels)
    if y.shape[0] != X.shape[0]:
        raise InputError("features and labels disagree on sample count")
    meta = {"seed": int(seed), "n_features": int(X.shape[1])}

    if len(table) == 1:
        nodes = [{"leaf": {0: int(y.shape[0])}}]
        meta["depth"] = 0
        meta["val_accuracy"] = 1.0
        return TreeModel(kind=CLASSIFIER, nodes=nodes, label_table=table,
                         meta=meta)

    tr, va = _val_split(X.shape[0], seed)
    best_depth, best_acc = None, -1.0
    for depth in depth_grid:
        nodes = []
        _grow_classifier(X[tr], y[tr], len(table), depth, nodes)
        model = TreeModel(kind=CLASSIFIER, nodes=nodes, label_table=table,
                          meta={"n_features": X.shape[1]})
        hits = 0
        for i in va:
            pred = model.predict(X[i], k=1)[0]
            hits += pred.key() == table[y[i]]
        acc = hits / max(1, va.size)
        if acc > best_acc + 1e-12:
            best_acc, best_depth = acc, depth

    nodes = []
    _grow_classifier(X, y, len(table), best_depth, nodes)
    meta["depth"] = int(best_depth)
    meta["val_accuracy"] = float(best_acc)
    return TreeModel(kind=CLASSIFIER, nodes=nodes, label_table=table,
                     meta=meta)


def _node_cost(R, rows):
    return float(R[rows].sum(axis=0).min())


def _grow_prescriptive(X, R, rows, depth, nodes, min_leaf):
    idx = len(nodes)
    nodes.append(None)
    cost = _node_cost(R, rows)
    best = None
    if depth > 0 and rows.size >= 2 * min_leaf:
        for f in range(X.shape[1]):
            col = X[rows, f]
            for t in _split_candidates(col):
                left = rows[col < t]
                right = rows[col >= t]
                if left.size < min_leaf or right.size < min_leaf:
                    continue
                score = _node_cost(R, left) + _node_cost(R, right)
                if best is None or score < best[0] - 1e-12:
                    best = (score, f, t)
    rel_improve = 1e-6 * (cost + 1.0)
    if best is None or cost - best[0] < rel_improve:
        nodes[idx] = {"leaf": R[rows].mean(axis=0).tolist()}
        return idx
    _, f, t = best
    col = X[rows, f]
    li = _grow_prescriptive(X, R, rows[col < t], depth - 1, nodes, min_leaf)
    ri = _grow_prescriptive(X, R, rows[col >= t], depth - 1, nodes, min_leaf)
    nodes[idx] = {"feature": f, "threshold": t, "left": li, "right": ri}
    return idx


def training_objective(model, X, R):
    """sum_i R[i, argmin at leaf(theta_i)] — the objective being minimized."""
    total = 0.0
    for i in range(X.shape[0]):
        means = np.asarray(model.leaf_for(X[i]), dtype=float)
        total += float(R[i, int(np.lexsort((np.arange(len(means)), means))[0])])
    return total


def train_prescriptive(features, rewards, depth_grid=DEPTH_GRID, seed=0,
                       min_leaf=MIN_LEAF_PRESCRIPTIVE):
    """Greedy reward-matrix tree: node cost is the best single strategy's
    summed reward over the node's rows; depth picked on a validation split
    by realized reward."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    R = np.asarray(rewards.entries, dtype=float)
    if R.shape[0] != X.shape[0]:
        raise InputError("reward matrix rows must match feature rows")
    table = [s.key() for s in rewards.strategies]
    meta = {"seed": int(seed), "n_features": int(X.shape[1])}

    tr, va = _val_split(X.shape[0], seed)
    best_depth, best_obj = None, np.inf
    for depth in depth_grid:
        nodes = []
        _grow_prescriptive(X[tr], R[tr], np.arange(tr.size), depth, nodes,
                           min_leaf)
        model = TreeModel(kind=PRESCRIPTIVE, nodes=nodes, label_table=table,
                          meta={"n_features": X.shape[1]})
        obj = training_objective(model, X[va], R[va])
        if obj < best_obj - 1e-12:
            best_obj, best_depth = obj, depth

    nodes = []
    _grow_prescriptive(X, R, np.arange(X.shape[0]), best_depth, nodes,
                       min_leaf)
    meta["depth"] = int(best_depth)
    return TreeModel(kind=PRESCRIPTIVE, nodes=nodes, label_table=table,
                     meta=meta)


def subsample_strategies(strategies, counts, q, rng):
    """Uniform subsample without replacement, always keeping the most
    frequent strategy (ties by first occurrence)."""
    if q < 1:
        raise InputError("subsample size must be positive")
    n = len(strategies)
    if q >= n:
        return list(strategies)
    top = int(np.argmax(counts))
    rest = [i for i in range(n) if i != top]
    pick = rng.choice(len(rest), size=q - 1, replace=False)
    chosen = sorted([top] + [rest[int(i)] for i in pick])
    return [strategies[i] for i in chosen]


@dataclass
class PartitionSpec:
    K: int
    assignment: dict   # tight-set tuple -> cell id
    unions: list       # per-cell sorted index tuple


def partition_strategies(samples, K):
    """Top K-1 most frequent tight sets become singleton cells; everything
    else is merged. Each sample's tight set is replaced by its cell union."""
    order, freq = [], {}
    for _, tau in samples:
        tau = tuple(sorted(set(int(j) for j in tau)))
        if tau not in freq:
            freq[tau] = 0
            order.append(tau)
        freq[tau] += 1
    distinct = sorted(order, key=lambda t: (-freq[t], order.index(t)))
    M = len(distinct)
    if not (1 <= K <= M):
        raise InputError(f"K must be between 1 and {M}")
    assignment = {}
    cells = [[] for _ in range(K)]
    for rank, tau in enumerate(distinct):
        cell = rank if rank < K - 1 else K - 1
        assignment[tau] = cell
        cells[cell].append(tau)
    unions = [tuple(sorted(set().union(*map(set, cell)))) for cell in cells]
    rewritten = []
    for x, tau in samples:
        tau = tuple(sorted(set(int(j) for j in tau)))
        rewritten.append((x, unions[assignment[tau]]))
    return PartitionSpec(K=K, assignment=assignment, unions=unions), rewritten

"""Exact greedy CART learner shared by the boosting and forest models.

Every feature is sorted once at the root; children inherit their parent's
per-feature sorted order through a stable boolean partition, so each tree
level costs O(n * n_features) regardless of how many nodes it holds.

A split on feature ``f`` with threshold ``t`` sends ``x[f] < t`` left.
Thresholds are midpoints between adjacent distinct values. Among equally
good candidates the lowest feature index wins, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..exceptions import ShapeError

LEAF = -1


@dataclass
class Tree:
    """Binary tree in flat-array form; node 0 is the root.

    ``feature[i] == -1`` marks a leaf. ``value`` has one row per node (the
    node's prediction, meaningful for leaves) and ``gain`` the accepted
    split gain of internal nodes (0 for leaves).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.size

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == LEAF

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=int)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat != LEAF
            if not active.any():
                return node
            r, n, f = rows[active], node[active], feat[active]
            go_left = X[r, f] < self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def feature_gains(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        internal = ~self.is_leaf
        np.add.at(out, self.feature[internal], self.gain[internal])
        return out

    def to_arrays(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold, "left": self.left,
                "right": self.right, "value": self.value, "gain": self.gain, "n_samples": self.n_samples}

    @classmethod
    def from_arrays(cls, arrays: dict) -> "Tree":
        return cls(**{k: np.asarray(arrays[k]) for k in
                      ("feature", "threshold", "left", "right", "value", "gain", "n_samples")})


class GradientCriterion:
    """Second-order boosting objective; stats columns are (gradient, hessian)."""

    kind = 0

    def __init__(self, reg_lambda=1.0, gamma=0.0):
        self.reg_lambda = float(reg_lambda)
        self.gamma = float(gamma)

    def value(self, total):
        denom = total[1] + self.reg_lambda
        return np.array([-total[0] / denom if denom > 0 else 0.0])

    def is_pure(self, total):
        return False


class GiniCriterion:
    """Weighted Gini impurity decrease; stats columns are per-class weights."""

    kind = 1
    reg_lambda = 0.0
    gamma = 0.0

    def value(self, total):
        s = total.sum()
        return total / s if s > 0 else np.full(total.size, 1.0 / total.size)

    def is_pure(self, total):
        return np.count_nonzero(total) <= 1


@njit(cache=True)
def _scan(XT, S, feats, stats, weights, kind, reg_lambda, gamma, min_child):
    """Best (feature, position, gain) over the sorted candidate positions.

    Position ``i`` splits between the i-th and (i+1)-th smallest value.
    Only a strictly larger gain replaces the incumbent, which yields the
    lowest-feature, lowest-threshold tie-break.
    """
    m = S.shape[1]
    c = stats.shape[1]
    total = np.zeros(c)
    n_total = 0.0
    for i in range(m):
        r = S[0, i]
        n_total += weights[r]
        for j in range(c):
            total[j] += stats[r, j]
    if kind == 0:
        parent = total[0] * total[0] / (total[1] + reg_lambda)
    else:
        parent = 0.0
        for j in range(c):
            parent += total[j] * total[j]
        parent /= n_total

    best_gain = 0.0
    best_f = -1
    best_pos = -1
    left = np.empty(c)
    for f in feats:
        row = S[f]
        vals = XT[f]
        left[:] = 0.0
        n_left = 0.0
        for i in range(m - 1):
            r = row[i]
            n_left += weights[r]
            for j in range(c):
                left[j] += stats[r, j]
            if not vals[r] < vals[row[i + 1]]:
                continue
            if n_left < min_child or n_total - n_left < min_child:
                continue
            if kind == 0:
                hl = left[1] + reg_lambda
                hr = total[1] - left[1] + reg_lambda
                if hl <= 0.0 or hr <= 0.0:
                    continue
                gr = total[0] - left[0]
                gain = 0.5 * (left[0] * left[0] / hl + gr * gr / hr - parent) - gamma
            else:
                sl = 0.0
                sr = 0.0
                for j in range(c):
                    sl += left[j] * left[j]
                    rj = total[j] - left[j]
                    sr += rj * rj
                gain = sl / n_left + sr / (n_total - n_left) - parent
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_pos = i
    return best_f, best_pos, best_gain


@njit(cache=True)
def _partition(S, keep):
    """Split each row of S into (kept, dropped) entries, preserving order."""
    d, m = S.shape
    n_keep = 0
    for i in range(m):
        if keep[S[0, i]]:
            n_keep += 1
    L = np.empty((d, n_keep), dtype=S.dtype)
    R = np.empty((d, m - n_keep), dtype=S.dtype)
    for f in range(d):
        li = 0
        ri = 0
        for i in range(m):
            r = S[f, i]
            if keep[r]:
                L[f, li] = r
                li += 1
            else:
                R[f, ri] = r
                ri += 1
    return L, R


def presort(X) -> np.ndarray:
    """Row indices sorting each feature, shape (n_features, n_samples)."""
    return np.argsort(np.asarray(X, dtype=float).T, axis=1, kind="stable")


def grow_tree(X, stats, criterion, *, weights=None, max_depth=4, min_child_samples=2,
              max_features=None, rng=None, sorted_rows=None) -> Tree:
    """Greedy depth-first tree growth.

    Parameters
    ----------
    X : (n, d) array
    stats : (n, c) array
        Per-sample additive statistics consumed by ``criterion``.
    weights : (n,) array, optional
        Sample multiplicities (bootstrap counts); rows with weight 0 are ignored.
    max_features : int, optional
        Features examined per node, drawn without replacement from ``rng``.
    sorted_rows : (d, n) int array, optional
        Output of ``presort(X)``, reusable across trees on the same ``X``.
    """
    X = np.asarray(X, dtype=float)
    stats = np.asarray(stats, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError("tree learner needs a non-empty 2-d feature matrix")
    if stats.ndim == 1:
        stats = stats[:, None]
    n, d = X.shape
    if weights is None:
        weights = np.ones(n)
    weights = np.asarray(weights, dtype=float)
    stats = np.ascontiguousarray(stats * weights[:, None])
    XT = np.ascontiguousarray(X.T)
    if sorted_rows is None:
        sorted_rows = presort(X)
    sorted_rows = np.ascontiguousarray(sorted_rows, dtype=np.int64)
    if np.any(weights <= 0):
        sorted_rows, _ = _partition(sorted_rows, weights > 0)
    all_feats = np.arange(d, dtype=np.int64)

    feature, threshold, left, right, values, gains, counts = [], [], [], [], [], [], []

    def new_node():
        for lst, v in ((feature, LEAF), (threshold, 0.0), (left, LEAF), (right, LEAF),
                       (values, None), (gains, 0.0), (counts, 0.0)):
            lst.append(v)
        return len(feature) - 1

    root = new_node()
    stack = [(root, sorted_rows, 0)]
    while stack:
        node, S, depth = stack.pop()
        node_rows = S[0]
        total = stats[node_rows].sum(axis=0)
        count = weights[node_rows].sum()
        values[node] = criterion.value(total)
        counts[node] = count
        if (depth >= max_depth or S.shape[1] < 2 or count < 2 * min_child_samples
                or criterion.is_pure(total)):
            continue
        if max_features is not None and max_features < d:
            feats = np.sort(rng.choice(d, size=max_features, replace=False)).astype(np.int64)
        else:
            feats = all_feats
        f, pos, gain = _scan(XT, S, feats, stats, weights, criterion.kind, criterion.reg_lambda,
                             criterion.gamma, float(min_child_samples))
        if f < 0:
            continue
        thr = 0.5 * (XT[f, S[f, pos]] + XT[f, S[f, pos + 1]])
        S_left, S_right = _partition(S, XT[f] < thr)
        feature[node], threshold[node], gains[node] = int(f), float(thr), float(gain)
        left[node] = new_node()
        right[node] = new_node()
        # LIFO: the left subtree is expanded first
        stack.append((right[node], S_right, depth + 1))
        stack.append((left[node], S_left, depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.vstack(values),
        gain=np.asarray(gains, dtype=float),
        n_samples=np.asarray(counts, dtype=float),
    )


def build_tree(X, grad, hess, k=None, *, max_depth=4, reg_lambda=1.0, gamma=0.0,
               min_child_samples=2, sorted_rows=None) -> Tree:
    """Fit one boosting tree to gradients/hessians.

    ``grad``/``hess`` may be 1-d, or 2-d (samples x classes) with ``k``
    selecting the class column. Leaf values are ``-G / (H + reg_lambda)``.
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    if grad.ndim == 2:
        grad, hess = grad[:, k], hess[:, k]
    if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        raise ValueError("gradients and hessians must be finite")
    if np.any(hess < 0):
        raise ValueError("hessians must be non-negative")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != grad.shape[0]:
        raise ShapeError("feature matrix and gradients must be non-empty and aligned")
    return grow_tree(X, np.column_stack([grad, hess]), GradientCriterion(reg_lambda, gamma),
                     max_depth=max_depth, min_child_samples=min_child_samples, sorted_rows=sorted_rows)


def build_gini_tree(X, y, n_classes, *, weights=None, max_depth=None, min_child_samples=1,
                    max_features=None, rng=None, sorted_rows=None) -> Tree:
    """Classification tree on Gini impurity; leaves hold class frequencies."""
    y = np.asarray(y, dtype=np.int64)
    onehot = np.zeros((y.size, n_classes))
    onehot[np.arange(y.size), y] = 1.0
    depth = np.iinfo(np.int32).max if max_depth is None else max_depth
    return grow_tree(X, onehot, GiniCriterion(), weights=weights, max_depth=depth,
                     min_child_samples=min_child_samples, max_features=max_features, rng=rng,
                     sorted_rows=sorted_rows)


class PackedForest:
    """All trees of an ensemble in one node table, traversed together."""

    def __init__(self, trees):
        offsets = np.cumsum([0] + [t.node_count for t in trees[:-1]]) if trees else np.zeros(0, int)
        self.roots = np.asarray(offsets, dtype=np.int64)
        if trees:
            self.feature = np.concatenate([t.feature for t in trees])
            self.threshold = np.concatenate([t.threshold for t in trees])
            self.left = np.concatenate([np.where(t.left >= 0, t.left + o, LEAF) for t, o in zip(trees, offsets)])
            self.right = np.concatenate([np.where(t.right >= 0, t.right + o, LEAF) for t, o in zip(trees, offsets)])
            self.value = np.concatenate([t.value for t in trees])
        self.n_trees = len(trees)

    def leaf_values(self, X) -> np.ndarray:
        """Array (n_samples, n_trees, n_outputs) of leaf predictions."""
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        node = np.broadcast_to(self.roots, (n, self.n_trees)).copy()
        rows = np.broadcast_to(np.arange(n)[:, None], node.shape)
        while True:
            feat = self.feature[node]
            active = feat != LEAF
            if not active.any():
                break
            n_act = node[active]
            go_left = X[rows[active], feat[active]] < self.threshold[n_act]
            node[active] = np.where(go_left, self.left[n_act], self.right[n_act])
        return self.value[node]

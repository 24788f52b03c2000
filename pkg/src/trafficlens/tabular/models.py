"""Severity classifiers: boosted trees, random forest and softmax regression."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import ConfigError, DegenerateDataError, ShapeError
from .tree import PackedForest, Tree, build_gini_tree, build_tree, presort


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(proba: np.ndarray, y_index: np.ndarray) -> float:
    picked = proba[np.arange(y_index.size), y_index]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


class _TabularClassifier(ClassifierMixin, BaseEstimator):
    """Label bookkeeping and input validation shared by the classifiers."""

    def _validate_fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes, y_index = np.unique(y, return_inverse=True)
        if classes.size < 2:
            raise DegenerateDataError("need at least two distinct classes to fit")
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        return X, y_index

    def _validate_predict(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class BoostedTreesClassifier(_TabularClassifier):
    """Second-order gradient boosting on the softmax cross-entropy.

    Each round fits one regression tree per class to the gradients
    ``p - y`` and hessians ``p (1 - p)`` of the current scores; leaf values
    are Newton steps ``-G / (H + reg_lambda)``. Scores start at the log
    class priors. No row or column subsampling, so fitting is deterministic.
    """

    def __init__(self, n_rounds=100, learning_rate=0.1, max_depth=4, reg_lambda=1.0,
                 gamma=0.0, min_child_samples=2):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.min_child_samples = min_child_samples

    def fit(self, X, y):
        if not 0 < self.learning_rate <= 1:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.reg_lambda < 0 or self.gamma < 0:
            raise ConfigError("reg_lambda and gamma must be non-negative")
        X, y_index = self._validate_fit(X, y)
        n, k = X.shape[0], self.classes_.size
        target = np.zeros((n, k))
        target[np.arange(n), y_index] = 1.0
        self.base_score_ = np.log(np.bincount(y_index, minlength=k) / n)
        scores = np.tile(self.base_score_, (n, 1))
        trees = []
        losses = [cross_entropy(softmax(scores), y_index)]
        order = presort(X)
        for _ in range(self.n_rounds):
            p = softmax(scores)
            grad = p - target
            hess = p * (1.0 - p)
            round_trees = [build_tree(X, grad, hess, c, max_depth=self.max_depth,
                                      reg_lambda=self.reg_lambda, gamma=self.gamma,
                                      min_child_samples=self.min_child_samples, sorted_rows=order)
                           for c in range(k)]
            for c, tree in enumerate(round_trees):
                scores[:, c] += self.learning_rate * tree.predict(X)[:, 0]
            trees.append(round_trees)
            losses.append(cross_entropy(softmax(scores), y_index))
        self.trees_ = trees
        self.train_loss_ = np.asarray(losses)
        self._pack()
        return self

    def _pack(self):
        self._packed = PackedForest([t for round_trees in self.trees_ for t in round_trees])

    def decision_function(self, X):
        X = self._validate_predict(X)
        k = self.classes_.size
        scores = np.tile(self.base_score_, (X.shape[0], 1))
        if self.trees_:
            leaves = self._packed.leaf_values(X)[:, :, 0]
            scores += self.learning_rate * leaves.reshape(X.shape[0], len(self.trees_), k).sum(axis=1)
        return scores

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    @property
    def feature_gain_(self) -> np.ndarray:
        """Total split gain per input column over all trees."""
        check_is_fitted(self, "trees_")
        out = np.zeros(self.n_features_in_)
        for round_trees in self.trees_:
            for t in round_trees:
                out += t.feature_gains(self.n_features_in_)
        return out

    @property
    def feature_importances_(self) -> np.ndarray:
        gain = self.feature_gain_
        total = gain.sum()
        return gain / total if total > 0 else gain

    def to_state(self) -> dict:
        check_is_fitted(self, "trees_")
        arrays = {"classes": self.classes_, "base_score": self.base_score_, "train_loss": self.train_loss_}
        for r, round_trees in enumerate(self.trees_):
            for c, t in enumerate(round_trees):
                for key, arr in t.to_arrays().items():
                    arrays[f"tree_{r}_{c}_{key}"] = arr
        return {"params": {**self.get_params(), "n_features_in": self.n_features_in_,
                           "rounds_fitted": len(self.trees_)},
                "arrays": arrays}

    @classmethod
    def from_state(cls, state: dict) -> "BoostedTreesClassifier":
        params = dict(state["params"])
        n_features = params.pop("n_features_in")
        rounds = params.pop("rounds_fitted")
        a = state["arrays"]
        model = cls(**params)
        model.classes_ = np.asarray(a["classes"])
        model.n_features_in_ = n_features
        model.base_score_ = np.asarray(a["base_score"], dtype=float)
        model.train_loss_ = np.asarray(a["train_loss"], dtype=float)
        k = model.classes_.size
        model.trees_ = [[Tree.from_arrays({key: a[f"tree_{r}_{c}_{key}"] for key in
                                           ("feature", "threshold", "left", "right", "value", "gain", "n_samples")})
                         for c in range(k)] for r in range(rounds)]
        model._pack()
        return model


class RandomForestClassifier(_TabularClassifier):
    """Bagged Gini trees with a random feature subset examined at every node.

    Bootstrap resamples are represented as per-row multiplicities
    (``bootstrap_counts_``). Leaves store class-frequency vectors and the
    forest averages them.
    """

    def __init__(self, n_trees=100, max_depth=None, min_child_samples=1, max_features="sqrt",
                 bootstrap=True, seed=42):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_child_samples = min_child_samples
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed

    def _n_features_per_split(self, d):
        if self.max_features is None:
            return d
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        if isinstance(self.max_features, float):
            return max(1, int(self.max_features * d))
        return min(int(self.max_features), d)

    def fit(self, X, y):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be at least 1")
        X, y_index = self._validate_fit(X, y)
        n, d = X.shape
        k = self.classes_.size
        rng = np.random.default_rng(self.seed)
        max_feats = self._n_features_per_split(d)
        trees, counts = [], []
        order = presort(X)
        for _ in range(self.n_trees):
            if self.bootstrap:
                w = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
            else:
                w = np.ones(n)
            trees.append(build_gini_tree(X, y_index, k, weights=w, max_depth=self.max_depth,
                                         min_child_samples=self.min_child_samples,
                                         max_features=max_feats if max_feats < d else None, rng=rng,
                                         sorted_rows=order))
            counts.append(w)
        self.trees_ = trees
        self.bootstrap_counts_ = np.asarray(counts)
        self._packed = PackedForest(trees)
        return self

    def predict_proba(self, X):
        X = self._validate_predict(X)
        proba = self._packed.leaf_values(X).mean(axis=1)
        return proba / proba.sum(axis=1, keepdims=True)

    @property
    def feature_gain_(self) -> np.ndarray:
        check_is_fitted(self, "trees_")
        return sum(t.feature_gains(self.n_features_in_) for t in self.trees_)

    @property
    def feature_importances_(self) -> np.ndarray:
        gain = self.feature_gain_
        total = gain.sum()
        return gain / total if total > 0 else gain

    def to_state(self) -> dict:
        check_is_fitted(self, "trees_")
        arrays = {"classes": self.classes_}
        for i, t in enumerate(self.trees_):
            for key, arr in t.to_arrays().items():
                arrays[f"tree_{i}_{key}"] = arr
        return {"params": {**self.get_params(), "n_features_in": self.n_features_in_}, "arrays": arrays}

    @classmethod
    def from_state(cls, state: dict) -> "RandomForestClassifier":
        params = dict(state["params"])
        n_features = params.pop("n_features_in")
        a = state["arrays"]
        model = cls(**params)
        model.classes_ = np.asarray(a["classes"])
        model.n_features_in_ = n_features
        model.trees_ = [Tree.from_arrays({key: a[f"tree_{i}_{key}"] for key in
                                          ("feature", "threshold", "left", "right", "value", "gain", "n_samples")})
                        for i in range(model.n_trees)]
        model._packed = PackedForest(model.trees_)
        return model


def softmax_loss_grad(W, X, target, l2):
    """Mean softmax cross-entropy plus ``l2/2 * ||W||^2`` and its gradient.

    ``W`` is (classes, features + 1) with the bias in the last column;
    ``target`` holds one-hot (or soft) labels.
    """
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    p = softmax(Xb @ W.T)
    n = X.shape[0]
    loss = -np.sum(target * np.log(np.maximum(p, 1e-300))) / n + 0.5 * l2 * np.sum(W * W)
    grad = (p - target).T @ Xb / n + l2 * W
    return loss, grad


class SoftmaxRegression(_TabularClassifier):
    """Multinomial logistic regression by full-batch gradient descent.

    With ``step_size=None`` the step is ``1 / L`` for the smoothness bound
    ``L = 0.5 * lambda_max(Xb^T Xb) / n + l2``, which makes the loss
    non-increasing.
    """

    def __init__(self, steps=500, step_size=None, l2=1e-4, tol=1e-8):
        self.steps = steps
        self.step_size = step_size
        self.l2 = l2
        self.tol = tol

    def fit(self, X, y):
        X, y_index = self._validate_fit(X, y)
        n, d = X.shape
        k = self.classes_.size
        target = np.zeros((n, k))
        target[np.arange(n), y_index] = 1.0
        Xb = np.hstack([X, np.ones((n, 1))])
        lipschitz = 0.5 * np.linalg.eigvalsh(Xb.T @ Xb / n)[-1] + self.l2
        step = 1.0 / lipschitz if self.step_size is None else self.step_size
        W = np.zeros((k, d + 1))
        losses = []
        for _ in range(self.steps):
            loss, grad = softmax_loss_grad(W, X, target, self.l2)
            losses.append(loss)
            if np.linalg.norm(grad) < self.tol:
                break
            W -= step * grad
        loss, grad = softmax_loss_grad(W, X, target, self.l2)
        losses.append(loss)
        self.coef_ = W
        self.lipschitz_ = float(lipschitz)
        self.loss_history_ = np.asarray(losses)
        self.grad_norm_ = float(np.linalg.norm(grad))
        return self

    def predict_proba(self, X):
        X = self._validate_predict(X)
        return softmax(np.hstack([X, np.ones((X.shape[0], 1))]) @ self.coef_.T)

    def to_state(self) -> dict:
        check_is_fitted(self, "coef_")
        return {"params": {**self.get_params(), "n_features_in": self.n_features_in_},
                "arrays": {"classes": self.classes_, "coef": self.coef_}}

    @classmethod
    def from_state(cls, state: dict) -> "SoftmaxRegression":
        params = dict(state["params"])
        n_features = params.pop("n_features_in")
        model = cls(**params)
        model.classes_ = np.asarray(state["arrays"]["classes"])
        model.coef_ = np.asarray(state["arrays"]["coef"], dtype=float)
        model.n_features_in_ = n_features
        return model


def fit_gbdt(X, labels, **params) -> BoostedTreesClassifier:
    return BoostedTreesClassifier(**params).fit(X, labels)


def fit_random_forest(X, labels, **params) -> RandomForestClassifier:
    return RandomForestClassifier(**params).fit(X, labels)


def fit_logistic(X, labels, **params) -> SoftmaxRegression:
    return SoftmaxRegression(**params).fit(X, labels)


def predict_proba(model, X) -> np.ndarray:
    return model.predict_proba(X)

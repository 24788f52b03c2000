"""Class balancing, gain importance, soft-vote ensembling and grid search."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone
from sklearn.model_selection import ParameterGrid, StratifiedKFold

from ..exceptions import ConfigError, DegenerateDataError, SchemaError


@dataclass(frozen=True)
class ImportanceReport:
    """(source feature, total split gain) pairs, largest gain first."""

    items: tuple

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.items]

    def top(self, k: int) -> list[str]:
        return self.names[:k]

    def share(self, name: str) -> float:
        total = sum(g for _, g in self.items)
        return dict(self.items)[name] / total if total > 0 else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["feature", "gain"])
        for name, gain in self.items:
            writer.writerow([name, repr(float(gain))])
        return buf.getvalue()


def feature_importance(model, columns=None) -> ImportanceReport:
    """Total split gain per source feature.

    ``columns`` is the ``ColumnInfo`` sequence of the encoded matrix; one-hot
    columns are folded back into their source feature. Without it each
    column is reported under its index. A model without any split yields an
    empty report.
    """
    gain = np.asarray(model.feature_gain_, dtype=float)
    if not np.any(gain > 0):
        return ImportanceReport(())
    if columns is None:
        sources = [f"x{i}" for i in range(gain.size)]
    else:
        sources = [c.source if hasattr(c, "source") else str(c) for c in columns]
        if len(sources) != gain.size:
            raise SchemaError("column metadata does not match the model's feature count")
    totals: dict[str, float] = {}
    for name, g in zip(sources, gain):
        totals[name] = totals.get(name, 0.0) + float(g)
    items = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return ImportanceReport(tuple(items))


def balance_classes(X, labels, strategy="downsample", seed=42, classes=None):
    """Equalize class counts.

    ``downsample`` keeps a seeded subset of each class of the minority size;
    ``oversample`` keeps every row and tops each class up to the majority
    size with seeded draws (with replacement) from that class. Rows come
    back in original order, extra copies after them.
    """
    X = np.asarray(X)
    labels = np.asarray(labels)
    if X.shape[0] != labels.shape[0]:
        raise SchemaError("features and labels are not aligned")
    present = np.unique(labels)
    classes = present if classes is None else np.asarray(classes)
    counts = np.array([np.count_nonzero(labels == c) for c in classes])
    if classes.size < 2:
        raise DegenerateDataError("balancing needs at least two classes")
    if np.any(counts == 0):
        raise DegenerateDataError(f"class {classes[counts == 0][0]!r} has no samples")
    rng = np.random.default_rng(seed)
    if strategy in ("downsample", "down"):
        target = counts.min()
        keep = [np.sort(rng.choice(np.flatnonzero(labels == c), size=target, replace=False))
                for c in classes]
        idx = np.sort(np.concatenate(keep))
    elif strategy in ("oversample", "over"):
        target = counts.max()
        extra = []
        for c, count in zip(classes, counts):
            members = np.flatnonzero(labels == c)
            extra.append(rng.choice(members, size=target - count, replace=True))
        idx = np.concatenate([np.arange(labels.size)] + extra)
    else:
        raise ConfigError(f"unknown balancing strategy {strategy!r}")
    return X[idx], labels[idx]


def ensemble_predict(models, X, weights=None) -> np.ndarray:
    """Weighted mean of the models' class-probability vectors."""
    if not models:
        raise ConfigError("ensemble needs at least one model")
    weights = np.full(len(models), 1.0 / len(models)) if weights is None else np.asarray(weights, dtype=float)
    if weights.size != len(models) or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ConfigError("ensemble weights must be non-negative, one per model, and sum to 1")
    reference = np.asarray(models[0].classes_)
    for m in models[1:]:
        if not np.array_equal(np.asarray(m.classes_), reference):
            raise SchemaError("ensemble members disagree on the class set")
    proba = sum(w * m.predict_proba(X) for w, m in zip(weights, models))
    return proba / proba.sum(axis=1, keepdims=True)


class SoftVotingEnsemble:
    """Fitted-model ensemble with the classifier predict/predict_proba surface."""

    def __init__(self, models, weights=None):
        self.models = list(models)
        self.weights = weights
        self.classes_ = np.asarray(self.models[0].classes_)

    def predict_proba(self, X):
        return ensemble_predict(self.models, X, self.weights)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def grid_search(estimator, X, labels, param_grid, folds=3, seed=42, n_iter=None):
    """Stratified k-fold cross-validated accuracy for every grid cell.

    Returns ``(best_params, table)`` where ``table`` lists one dict per cell
    (``params``, ``fold_scores``, ``mean_score``) in grid order. The best
    cell has the highest mean accuracy; ties go to the earliest cell. With
    ``n_iter`` a seeded subset of that many cells is evaluated.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    cells = list(ParameterGrid(param_grid))
    if not cells:
        raise ConfigError("parameter grid is empty")
    if folds < 2:
        raise ConfigError("need at least two folds")
    smallest = np.unique(labels, return_counts=True)[1].min()
    if folds > smallest:
        raise ConfigError(f"{folds} folds exceed the smallest class size {smallest}")
    if n_iter is not None and n_iter < len(cells):
        picked = np.sort(np.random.default_rng(seed).choice(len(cells), size=n_iter, replace=False))
        cells = [cells[i] for i in picked]
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    splits = list(splitter.split(X, labels))
    table = []
    for params in cells:
        scores = []
        for train, test in splits:
            model = clone(estimator).set_params(**params).fit(X[train], labels[train])
            scores.append(float(np.mean(model.predict(X[test]) == labels[test])))
        table.append({"params": params, "fold_scores": scores, "mean_score": float(np.mean(scores))})
    best = max(range(len(table)), key=lambda i: (table[i]["mean_score"], -i))
    return table[best]["params"], table

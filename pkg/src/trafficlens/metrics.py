"""Classification metrics, one-vs-rest ROC curves, and timing harnesses."""

from __future__ import annotations

import csv
import io
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .exceptions import ConfigError, DegenerateDataError, LabelError, ShapeError

WARMUP_CALLS = 10
MIN_REPETITIONS = 30
# reference single-sample latencies (ms) reported alongside measurements
REFERENCE_LATENCY_MS = {"gbdt": 4.2, "rf": 5.7, "logistic": 1.2, "cnn": 28.5}


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts with rows = actual class, columns = predicted class."""

    counts: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] == 0:
            raise ShapeError(f"confusion matrix must be square and non-empty, got {counts.shape}")
        if np.any(counts < 0):
            raise ShapeError("confusion counts must be non-negative")
        labels = tuple(self.labels) if self.labels else tuple(str(i) for i in range(counts.shape[0]))
        if len(labels) != counts.shape[0]:
            raise ShapeError("one label per class is required")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "labels", labels)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.counts, other.counts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["actual\\predicted", *self.labels])
        for label, row in zip(self.labels, self.counts):
            writer.writerow([label, *row.tolist()])
        return buf.getvalue()


def confusion(actual, predicted, k: int, labels=()) -> ConfusionMatrix:
    actual = np.asarray(actual)
    predicted = np.asarray(predicted)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise ShapeError("actual and predicted must be equal-length vectors")
    for name, v in (("actual", actual), ("predicted", predicted)):
        if v.size and (not np.issubdtype(v.dtype, np.integer) or v.min() < 0 or v.max() >= k):
            raise LabelError(f"{name} labels must be integers in 0..{k - 1}")
    counts = np.bincount(actual.astype(np.int64) * k + predicted.astype(np.int64), minlength=k * k)
    return ConfusionMatrix(counts.reshape(k, k), labels)


@dataclass(frozen=True)
class ClassMetrics:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    warnings: tuple = ()


def prf1(cm: ConfusionMatrix) -> ClassMetrics:
    """Per-class and macro precision, recall and F1 plus accuracy.

    A zero denominator yields 0 for that entry and a warning string naming
    the class, never NaN.
    """
    c = cm.counts.astype(float)
    total = c.sum()
    if total == 0:
        raise ShapeError("confusion matrix holds no samples")
    tp = np.diag(c)
    col = c.sum(axis=0)
    row = c.sum(axis=1)
    warnings = []
    precision = np.zeros(tp.size)
    recall = np.zeros(tp.size)
    f1 = np.zeros(tp.size)
    for k, label in enumerate(cm.labels):
        if col[k] > 0:
            precision[k] = tp[k] / col[k]
        else:
            warnings.append(f"precision of class {label} undefined (never predicted); set to 0")
        if row[k] > 0:
            recall[k] = tp[k] / row[k]
        else:
            warnings.append(f"recall of class {label} undefined (no actual samples); set to 0")
        if precision[k] + recall[k] > 0:
            f1[k] = 2 * precision[k] * recall[k] / (precision[k] + recall[k])
    return ClassMetrics(
        accuracy=float(tp.sum() / total), precision=precision, recall=recall, f1=f1,
        macro_precision=float(precision.mean()), macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()), warnings=tuple(warnings))


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["threshold", "fpr", "tpr"])
        for t, f, r in zip(self.thresholds, self.fpr, self.tpr):
            writer.writerow([repr(float(t)), repr(float(f)), repr(float(r))])
        return buf.getvalue()


def mann_whitney_auc(scores, actual) -> float:
    """Probability a random positive outscores a random negative, ties counting 1/2."""
    scores = np.asarray(scores, dtype=float)
    actual = np.asarray(actual).astype(bool)
    pos = np.sort(scores[actual])
    neg = np.sort(scores[~actual])
    if pos.size == 0 or neg.size == 0:
        raise DegenerateDataError("AUC needs both positive and negative samples")
    below = np.searchsorted(neg, pos, side="left")
    ties = np.searchsorted(neg, pos, side="right") - below
    return float((below.sum() + 0.5 * ties.sum()) / (pos.size * neg.size))


def roc_auc(scores, actual) -> RocCurve:
    """ROC by sweeping thresholds over the distinct scores, high to low.

    Starts at (0, 0) with threshold +inf and ends at (1, 1). The trapezoid
    area is cross-checked against the Mann-Whitney statistic.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    actual = np.asarray(actual).ravel()
    if scores.shape != actual.shape:
        raise ShapeError("scores and labels must align")
    actual = actual.astype(bool)
    n_pos = int(actual.sum())
    n_neg = actual.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("ROC needs both positive and negative samples")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    a = actual[order]
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    tps = np.cumsum(a)[last]
    fps = (last + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    thresholds = np.r_[np.inf, s[last]]
    area = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    mw = mann_whitney_auc(scores, actual)
    if abs(area - mw) > 1e-9:
        raise ArithmeticError(f"trapezoid AUC {area} disagrees with Mann-Whitney {mw}")
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=area)


@dataclass
class EvalReport:
    """Accuracy, per-class and macro (unweighted mean) precision/recall/F1, confusion, AUC."""

    labels: tuple
    accuracy: float
    precision: list
    recall: list
    f1: list
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: list
    auc: list | None = None
    warnings: list = field(default_factory=list)
    train_seconds: float | None = None
    inference_ms: float | None = None
    averaging: str = "macro"

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels), "accuracy": self.accuracy, "averaging": self.averaging,
            "per_class": {
                label: {"precision": p, "recall": r, "f1": f,
                        **({"auc": a} if self.auc is not None else {})}
                for label, p, r, f, a in zip(self.labels, self.precision, self.recall, self.f1,
                                             self.auc if self.auc is not None else [None] * len(self.labels))
            },
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
            "confusion": self.confusion, "warnings": list(self.warnings),
            **({"train_seconds": self.train_seconds} if self.train_seconds is not None else {}),
            **({"inference_ms": self.inference_ms} if self.inference_ms is not None else {}),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "precision", "recall", "f1", "auc"])
        aucs = self.auc if self.auc is not None else [""] * len(self.labels)
        for row in zip(self.labels, self.precision, self.recall, self.f1, aucs):
            writer.writerow(row)
        writer.writerow(["macro", self.macro_precision, self.macro_recall, self.macro_f1, ""])
        writer.writerow(["accuracy", self.accuracy, "", "", ""])
        return buf.getvalue()


def evaluate(actual, predicted, proba=None, labels=None, train_seconds=None, inference_ms=None) -> EvalReport:
    """Build an ``EvalReport``; ``proba`` (n, K) adds one-vs-rest AUC per class.

    A class absent from ``actual`` gets ``None`` AUC and a warning.
    """
    actual = np.asarray(actual, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if labels is None:
        k = int(max(actual.max(initial=0), predicted.max(initial=0))) + 1
        if proba is not None:
            k = max(k, np.asarray(proba).shape[1])
        labels = tuple(str(i) for i in range(k))
    labels = tuple(labels)
    cm = confusion(actual, predicted, len(labels), labels)
    m = prf1(cm)
    warnings = list(m.warnings)
    auc = None
    if proba is not None:
        proba = np.asarray(proba, dtype=float)
        if proba.shape != (actual.size, len(labels)):
            raise ShapeError(f"probabilities must have shape ({actual.size}, {len(labels)})")
        auc = []
        for k, label in enumerate(labels):
            target = actual == k
            if target.all() or not target.any():
                auc.append(None)
                warnings.append(f"AUC of class {label} undefined (one-class slice)")
            else:
                auc.append(roc_auc(proba[:, k], target).auc)
    return EvalReport(labels=labels, accuracy=m.accuracy, precision=m.precision.tolist(),
                      recall=m.recall.tolist(), f1=m.f1.tolist(), macro_precision=m.macro_precision,
                      macro_recall=m.macro_recall, macro_f1=m.macro_f1, confusion=cm.counts.tolist(),
                      auc=auc, warnings=warnings, train_seconds=train_seconds, inference_ms=inference_ms)


# -- timing ------------------------------------------------------------------

def hardware_note() -> str:
    return (f"{platform.machine()} {platform.processor() or 'cpu'}, {os.cpu_count()} logical cores, "
            f"python {platform.python_version()}, numpy {np.__version__}, {platform.system()}")


def bench_latency(predict, X, repetitions: int = 100, warmup: int = WARMUP_CALLS) -> dict:
    """Wall-clock statistics of single-sample ``predict`` calls, in milliseconds.

    Calls cycle through the rows of ``X``. The first ``warmup`` calls are
    discarded. BLAS/OpenMP pools are pinned to one thread while timing.
    """
    if repetitions < MIN_REPETITIONS:
        raise ConfigError(f"need at least {MIN_REPETITIONS} repetitions, got {repetitions}")
    X = np.asarray(X)
    if X.shape[0] == 0:
        raise ShapeError("latency benchmark needs at least one sample")
    times = np.empty(repetitions)
    with threadpool_limits(limits=1):
        for i in range(warmup):
            predict(X[i % X.shape[0]][None])
        for i in range(repetitions):
            row = X[i % X.shape[0]][None]
            t0 = time.perf_counter()
            predict(row)
            times[i] = time.perf_counter() - t0
    ms = times * 1e3
    return {"mean_ms": float(ms.mean()), "p50_ms": float(np.percentile(ms, 50)),
            "p95_ms": float(np.percentile(ms, 95)), "max_ms": float(ms.max()),
            "repetitions": repetitions, "warmup": warmup, "hardware": hardware_note()}


def bench_scaling(fit, sizes, seed: int = 42, make_data=None) -> list[tuple[int, float]]:
    """Training seconds per dataset size.

    ``fit(X, y)`` is timed on ``make_data(size, seed)``; the default data
    are balanced synthetic accident records encoded to a matrix.
    """
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise ConfigError("need at least one size")
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("sizes must be ascending")
    make_data = make_data or _accident_matrix
    rows = []
    for size in sizes:
        X, y = make_data(size, seed)
        t0 = time.perf_counter()
        fit(X, y)
        rows.append((size, time.perf_counter() - t0))
    return rows


def scaling_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["size", "train_seconds"])
    for size, seconds in rows:
        writer.writerow([size, repr(float(seconds))])
    return buf.getvalue()


def _accident_matrix(size, seed):
    from .datamodel import encode_features
    from .datasynth import gen_accidents

    records = gen_accidents(n=size, seed=seed)
    fm, labels = encode_features(records)
    return fm.values, labels

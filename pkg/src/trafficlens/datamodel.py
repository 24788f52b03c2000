"""Shared domain types, feature encoding and train/test splitting."""

from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, DataError, SchemaError

UNKNOWN = "unknown"


class Severity(enum.IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @classmethod
    def parse(cls, token) -> "Severity":
        if isinstance(token, cls):
            return token
        if isinstance(token, numbers.Integral):
            return cls(int(token))
        text = str(token).strip()
        for member in cls:
            if member.label == text or member.name == text.upper():
                return member
        raise ValueError(f"unknown severity {token!r}")

    @property
    def label(self) -> str:
        return self.name.capitalize()


class ImageClass(enum.IntEnum):
    CLEAR = 0
    CONGESTED = 1
    CONSTRUCTION = 2
    ACCIDENT = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, token) -> "ImageClass":
        if isinstance(token, numbers.Integral):
            return cls(int(token))
        try:
            return cls[str(token).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown image class {token!r}") from None


SEVERITY_LABELS = tuple(s.label for s in Severity)
IMAGE_LABELS = tuple(c.label for c in ImageClass)


@dataclass(frozen=True, eq=False)
class TrafficSeries:
    """Hourly vehicle counts starting at ``start_time`` (epoch hours)."""

    values: np.ndarray
    start_time: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size < 1:
            raise DataError("traffic series must hold at least one value")
        if not np.all(np.isfinite(values)):
            raise DataError("traffic series contains non-finite values")
        if np.any(values < 0):
            raise DataError("traffic series contains negative counts")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start_time", int(self.start_time))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, TrafficSeries):
            return NotImplemented
        return self.start_time == other.start_time and np.array_equal(self.values, other.values)

    @property
    def timestamps(self) -> np.ndarray:
        return self.start_time + np.arange(self.values.size)


@dataclass(frozen=True)
class AccidentRecord:
    features: Mapping[str, Any]
    severity: Severity

    def __post_init__(self):
        object.__setattr__(self, "features", dict(self.features))
        object.__setattr__(self, "severity", Severity.parse(self.severity))


@dataclass(frozen=True, eq=False)
class ImageSample:
    """Image tensor of shape (H, W, C) with entries in [0, 1]."""

    pixels: np.ndarray
    label: ImageClass

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=float)
        if pixels.ndim == 2:
            pixels = pixels[:, :, None]
        if pixels.ndim != 3 or pixels.shape[0] < 8 or pixels.shape[1] < 8 or pixels.shape[2] not in (1, 3):
            raise DataError(f"bad image shape {pixels.shape}")
        if not np.all((pixels >= 0.0) & (pixels <= 1.0)):
            raise DataError("image entries must lie in [0, 1]")
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "label", ImageClass.parse(self.label))

    def __eq__(self, other):
        if not isinstance(other, ImageSample):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    kind: str  # "numeric" or "onehot"
    source: str
    category: str | None = None


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    columns: tuple[ColumnInfo, ...] = field(default_factory=tuple)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise SchemaError("column metadata does not match matrix width")
        if not np.all(np.isfinite(values)):
            raise DataError("feature matrix contains non-finite entries")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def shape(self):
        return self.values.shape

    @property
    def sources(self) -> list[str]:
        return [c.source for c in self.columns]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 42
    stratify: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train fraction must lie in (0, 1), got {self.train_fraction}")


def _is_missing(value) -> bool:
    return value is None or (isinstance(value, str) and value.strip() == "")


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


class FeatureEncoder(TransformerMixin, BaseEstimator):
    """Standardize numeric features and one-hot encode categorical ones.

    Columns are ordered lexicographically by feature name, and within a
    categorical feature by category token. Missing categoricals become the
    ``"unknown"`` category, missing numerics the training median. Tokens
    not seen during ``fit`` encode as an all-zero group.
    """

    def fit(self, records: Sequence[AccidentRecord], y=None):
        names = _schema(records)
        numeric, categories, medians, means, scales = [], {}, {}, {}, {}
        for name in names:
            column = [r.features[name] for r in records]
            present = [v for v in column if not _is_missing(v)]
            if present and all(_is_number(v) for v in present):
                arr = np.asarray(present, dtype=float)
                if not np.all(np.isfinite(arr)):
                    raise DataError(f"feature {name!r} has non-finite values")
                numeric.append(name)
                medians[name] = float(np.median(arr))
                filled = np.where(
                    [_is_missing(v) for v in column], medians[name],
                    [0.0 if _is_missing(v) else float(v) for v in column])
                means[name] = float(filled.mean())
                std = float(filled.std())
                scales[name] = std if std > 0 else 1.0
            else:
                categories[name] = sorted({UNKNOWN if _is_missing(v) else str(v) for v in column})
        self.feature_names_ = names
        self.numeric_ = numeric
        self.categories_ = categories
        self.medians_ = medians
        self.means_ = means
        self.scales_ = scales
        columns = []
        for name in names:
            if name in categories:
                columns.extend(ColumnInfo(f"{name}={c}", "onehot", name, c) for c in categories[name])
            else:
                columns.append(ColumnInfo(name, "numeric", name))
        self.columns_ = tuple(columns)
        return self

    def transform(self, records: Sequence[AccidentRecord]) -> np.ndarray:
        check_is_fitted(self, "columns_")
        names = _schema(records)
        if names != self.feature_names_:
            raise SchemaError("records do not match the fitted feature schema")
        out = np.zeros((len(records), len(self.columns_)))
        col = 0
        for name in self.feature_names_:
            if name in self.categories_:
                index = {c: i for i, c in enumerate(self.categories_[name])}
                for row, r in enumerate(records):
                    v = r.features[name]
                    token = UNKNOWN if _is_missing(v) else str(v)
                    pos = index.get(token)
                    if pos is not None:
                        out[row, col + pos] = 1.0
                col += len(index)
            else:
                values = np.empty(len(records))
                for row, r in enumerate(records):
                    v = r.features[name]
                    if _is_missing(v):
                        values[row] = self.medians_[name]
                    elif not _is_number(v) or not math.isfinite(v):
                        raise DataError(f"feature {name!r} row {row}: expected a finite number, got {v!r}")
                    else:
                        values[row] = v
                out[:, col] = (values - self.means_[name]) / self.scales_[name]
                col += 1
        return out

    def inverse_transform(self, X) -> list[dict]:
        check_is_fitted(self, "columns_")
        X = np.asarray(X, dtype=float)
        rows = [dict() for _ in range(X.shape[0])]
        col = 0
        for name in self.feature_names_:
            if name in self.categories_:
                cats = self.categories_[name]
                block = X[:, col:col + len(cats)]
                for row, hot in zip(rows, block):
                    row[name] = cats[int(np.argmax(hot))] if hot.max() > 0.5 else None
                col += len(cats)
            else:
                decoded = X[:, col] * self.scales_[name] + self.means_[name]
                for row, v in zip(rows, decoded):
                    row[name] = float(v)
                col += 1
        return rows

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "columns_")
        return np.asarray([c.name for c in self.columns_], dtype=object)

    def to_state(self) -> dict:
        check_is_fitted(self, "columns_")
        return {
            "feature_names": list(self.feature_names_),
            "numeric": list(self.numeric_),
            "categories": {k: list(v) for k, v in self.categories_.items()},
            "medians": self.medians_,
            "means": self.means_,
            "scales": self.scales_,
        }

    @classmethod
    def from_state(cls, state: dict) -> "FeatureEncoder":
        enc = cls()
        enc.feature_names_ = list(state["feature_names"])
        enc.numeric_ = list(state["numeric"])
        enc.categories_ = {k: list(v) for k, v in state["categories"].items()}
        enc.medians_ = {k: float(v) for k, v in state["medians"].items()}
        enc.means_ = {k: float(v) for k, v in state["means"].items()}
        enc.scales_ = {k: float(v) for k, v in state["scales"].items()}
        columns = []
        for name in enc.feature_names_:
            if name in enc.categories_:
                columns.extend(ColumnInfo(f"{name}={c}", "onehot", name, c) for c in enc.categories_[name])
            else:
                columns.append(ColumnInfo(name, "numeric", name))
        enc.columns_ = tuple(columns)
        return enc


def _schema(records) -> list[str]:
    if len(records) == 0:
        raise DataError("no records to encode")
    first = set(records[0].features)
    for i, r in enumerate(records):
        if set(r.features) != first:
            raise SchemaError(f"record {i} has a different feature set")
    return sorted(first)


def encode_features(records: Sequence[AccidentRecord], encoder: FeatureEncoder | None = None):
    """Encode records into a ``FeatureMatrix`` plus aligned integer labels.

    Pass a fitted ``encoder`` to reuse training statistics on new records.
    """
    if encoder is None:
        encoder = FeatureEncoder().fit(records)
    X = encoder.transform(records)
    y = np.fromiter((int(r.severity) for r in records), dtype=np.int64, count=len(records))
    return FeatureMatrix(X, encoder.columns_), y


def split_indices(n: int, spec: SplitSpec, labels=None) -> tuple[np.ndarray, np.ndarray]:
    """Seeded train/test partition of ``range(n)``; both parts returned sorted."""
    if n < 2:
        raise DataError("need at least two samples to split")
    rng = np.random.default_rng(spec.seed)
    if spec.stratify:
        if labels is None:
            raise ConfigError("stratified split needs labels")
        labels = np.asarray(labels)
        if labels.shape[0] != n:
            raise DataError("labels do not align with the dataset")
        train = []
        for cls in np.unique(labels):
            members = np.flatnonzero(labels == cls)
            members = members[rng.permutation(members.size)]
            take = int(math.floor(spec.train_fraction * members.size + 0.5))
            train.append(members[:take])
        train = np.sort(np.concatenate(train))
    else:
        take = int(math.floor(spec.train_fraction * n + 0.5))
        take = min(max(take, 1), n - 1)
        train = np.sort(rng.permutation(n)[:take])
    mask = np.zeros(n, dtype=bool)
    mask[train] = True
    return train, np.flatnonzero(~mask)


def split(dataset, spec: SplitSpec, labels=None):
    """Partition ``dataset`` (sequence or array) into (train, test)."""
    n = len(dataset)
    if labels is None and spec.stratify:
        labels = _labels_of(dataset)
    train, test = split_indices(n, spec, labels)
    if isinstance(dataset, np.ndarray):
        return dataset[train], dataset[test]
    return [dataset[i] for i in train], [dataset[i] for i in test]


def _labels_of(dataset):
    out = []
    for item in dataset:
        for attr in ("severity", "label"):
            if hasattr(item, attr):
                out.append(int(getattr(item, attr)))
                break
        else:
            raise ConfigError("cannot infer labels for a stratified split")
    return np.asarray(out)

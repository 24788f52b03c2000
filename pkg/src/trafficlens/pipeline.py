"""End-to-end flows shared by the command line and the test-suite.

Severity models travel together with the ``FeatureEncoder`` fitted on
their training split, so raw accident records go in and class
probabilities come out.
"""

from __future__ import annotations

import time

import numpy as np

from . import artifact
from .datamodel import IMAGE_LABELS, SEVERITY_LABELS, FeatureEncoder, SplitSpec, split_indices
from .exceptions import ArtifactError, ConfigError, SchemaError
from .metrics import EvalReport, evaluate
from .tabular import BoostedTreesClassifier, RandomForestClassifier, SoftmaxRegression, balance_classes
from .timeseries import SeasonalARIMA
from .vision import TrafficNet

SEVERITY_MODELS = {
    "gbdt": BoostedTreesClassifier,
    "rf": RandomForestClassifier,
    "logistic": SoftmaxRegression,
}
BALANCE = {"down": "downsample", "downsample": "downsample", "over": "oversample",
           "oversample": "oversample", "none": None}


class SeverityModel:
    """A fitted ``FeatureEncoder`` plus a tabular classifier."""

    def __init__(self, kind: str, encoder: FeatureEncoder, estimator):
        self.kind = kind
        self.encoder = encoder
        self.estimator = estimator
        self.classes_ = np.asarray(estimator.classes_)

    def transform(self, records) -> np.ndarray:
        return self.encoder.transform(records)

    def predict_proba(self, records) -> np.ndarray:
        return self.estimator.predict_proba(self.transform(records))

    def predict(self, records) -> np.ndarray:
        return self.estimator.predict(self.transform(records))

    @property
    def schema(self) -> dict:
        return {"task": "severity", "features": list(self.encoder.feature_names_),
                "columns": [c.name for c in self.encoder.columns_], "labels": list(SEVERITY_LABELS)}


def make_estimator(kind: str, params: dict | None = None, seed: int = 42):
    if kind not in SEVERITY_MODELS:
        raise ConfigError(f"unknown model {kind!r}; expected one of {', '.join(SEVERITY_MODELS)}")
    cls = SEVERITY_MODELS[kind]
    params = dict(params or {})
    if kind == "rf":
        params.setdefault("seed", seed)
    valid = cls().get_params()
    unknown = sorted(set(params) - set(valid))
    if unknown:
        raise ConfigError(f"unknown {kind} parameter(s): {', '.join(unknown)}")
    return cls(**params)


def labels_of(records) -> np.ndarray:
    return np.fromiter((int(r.severity) for r in records), dtype=np.int64, count=len(records))


def prepare_severity(records, balance="down", split=0.7, seed=42):
    """Balance (optional), then stratified train/test split of accident records."""
    if balance not in BALANCE:
        raise ConfigError(f"unknown balance strategy {balance!r}")
    y = labels_of(records)
    idx = np.arange(len(records))
    if BALANCE[balance] is not None:
        idx, y = balance_classes(idx, y, BALANCE[balance], seed)
    train, test = split_indices(idx.size, SplitSpec(split, seed, stratify=True), y)
    return [records[i] for i in idx[train]], [records[i] for i in idx[test]]


def fit_severity(records, kind="gbdt", params=None, seed=42):
    """Fit the encoder and a classifier on ``records``; returns (model, seconds)."""
    encoder = FeatureEncoder().fit(records)
    X = encoder.transform(records)
    estimator = make_estimator(kind, params, seed)
    t0 = time.perf_counter()
    estimator.fit(X, labels_of(records))
    return SeverityModel(kind, encoder, estimator), time.perf_counter() - t0


def evaluate_severity(model, records) -> EvalReport:
    proba = model.predict_proba(records)
    pred = model.classes_[np.argmax(proba, axis=1)]
    return evaluate(labels_of(records), pred, _full_proba(proba, model.classes_, len(SEVERITY_LABELS)),
                    labels=SEVERITY_LABELS)


def _full_proba(proba, classes, k):
    """Scatter class-probability columns into a K-wide matrix (absent classes get 0)."""
    out = np.zeros((proba.shape[0], k))
    out[:, np.asarray(classes, dtype=np.int64)] = proba
    return out


def evaluate_images(model, X, y) -> EvalReport:
    proba = model.predict_proba(X)
    return evaluate(y, np.argmax(proba, axis=1), proba, labels=IMAGE_LABELS)


# -- persistence ---------------------------------------------------------------


def save_model(path, model, extra: dict | None = None) -> str:
    """Write any supported model; returns the schema fingerprint."""
    if isinstance(model, SeverityModel):
        state = model.estimator.to_state()
        params = {"model": state["params"], "encoder": model.encoder.to_state()}
        return artifact.save(path, model.kind, {"params": {**params, **(extra or {})}, "arrays": state["arrays"]},
                             model.schema)
    if isinstance(model, TrafficNet):
        state = model.to_state()
        schema = {"task": "image", "input_shape": list(model.input_shape), "labels": list(IMAGE_LABELS)}
        return artifact.save(path, "cnn", {"params": {"model": state["params"], **(extra or {})},
                                           "arrays": state["arrays"]}, schema)
    if isinstance(model, SeasonalARIMA):
        state = model.to_state()
        schema = {"task": "forecast", "order": list(state["params"]["order"]),
                  "period": state["params"]["period"]}
        return artifact.save(path, "arima", {"params": {"model": state["params"], **(extra or {})},
                                             "arrays": state["arrays"]}, schema)
    raise ArtifactError(f"cannot serialize {type(model).__name__}")


def load_model(path):
    """Load a model artifact; returns ``(model, artifact)``."""
    art = artifact.load(path)
    params = art.params
    if art.kind in SEVERITY_MODELS:
        encoder = FeatureEncoder.from_state(params["encoder"])
        estimator = SEVERITY_MODELS[art.kind].from_state({"params": params["model"], "arrays": art.arrays})
        model = SeverityModel(art.kind, encoder, estimator)
    elif art.kind == "cnn":
        model = TrafficNet.from_state({"params": params["model"], "arrays": art.arrays})
    elif art.kind == "arima":
        model = SeasonalARIMA.from_state({"params": params["model"], "arrays": art.arrays})
    else:
        raise ArtifactError(f"unknown model kind {art.kind!r}", str(path))
    if art.kind in SEVERITY_MODELS and artifact.fingerprint(model.schema) != art.schema_fingerprint:
        raise SchemaError("restored encoder does not reproduce the stored schema", str(path))
    return model, art

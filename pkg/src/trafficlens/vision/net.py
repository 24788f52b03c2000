"""TrafficNet: a small convolutional image classifier trained by momentum SGD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigError, DataError, ShapeError, TrainingError
from .augment import random_augment
from .layers import conv2d_backward, conv2d_forward, maxpool2x2, maxpool2x2_backward, softmax


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 42
    augment: bool = False

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be at least 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")


class TrafficNet:
    """Conv(3x3, pad 1) -> ReLU -> MaxPool(2x2) blocks, then Dense -> ReLU -> Dense -> Softmax.

    The default stack is two conv blocks with 8 and 16 filters, a 64-unit
    hidden layer and 4 outputs on 32x32x1 input. ``filters=()`` gives a
    dense-only network. Weights use seeded He-uniform initialization,
    biases start at zero.
    """

    def __init__(self, input_shape=(32, 32, 1), n_classes=4, filters=(8, 16), hidden=64,
                 seed=42, dtype=np.float32):
        h, w, c = input_shape
        scale = 2 ** len(filters)
        if h % scale or w % scale:
            raise ShapeError(f"input {h}x{w} not divisible by {scale} for {len(filters)} pooling stages")
        self.input_shape = (int(h), int(w), int(c))
        self.n_classes = int(n_classes)
        self.filters = tuple(int(f) for f in filters)
        self.hidden = int(hidden)
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        self.classes_ = np.arange(self.n_classes)
        self.params = self._init_params()

    def _init_params(self) -> dict:
        rng = np.random.default_rng(self.seed)

        def he(shape, fan_in):
            limit = np.sqrt(6.0 / fan_in)
            return rng.uniform(-limit, limit, shape).astype(self.dtype)

        params = {}
        c = self.input_shape[2]
        for i, f in enumerate(self.filters):
            params[f"conv{i}_w"] = he((f, 3, 3, c), 9 * c)
            params[f"conv{i}_b"] = np.zeros(f, dtype=self.dtype)
            c = f
        h, w = (s // 2 ** len(self.filters) for s in self.input_shape[:2])
        flat = h * w * c
        params["fc0_w"] = he((flat, self.hidden), flat)
        params["fc0_b"] = np.zeros(self.hidden, dtype=self.dtype)
        params["fc1_w"] = he((self.hidden, self.n_classes), self.hidden)
        params["fc1_b"] = np.zeros(self.n_classes, dtype=self.dtype)
        return params

    def get_params(self, deep=False) -> dict:
        return {"input_shape": self.input_shape, "n_classes": self.n_classes, "filters": self.filters,
                "hidden": self.hidden, "seed": self.seed, "dtype": self.dtype.name}

    def astype(self, dtype) -> "TrafficNet":
        """Copy of the network with parameters cast to ``dtype``."""
        other = TrafficNet(self.input_shape, self.n_classes, self.filters, self.hidden, self.seed, dtype)
        other.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return other

    # -- passes --------------------------------------------------------------

    def _check_batch(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim == 3:
            X = X[None]
        if X.ndim != 4 or X.shape[1:] != self.input_shape:
            raise ShapeError(f"expected batch of shape (N, {', '.join(map(str, self.input_shape))}), "
                             f"got {X.shape}")
        return X.astype(self.dtype, copy=False)

    def _forward(self, X):
        cache = []
        a = X
        for i in range(len(self.filters)):
            z, cols = conv2d_forward(a, self.params[f"conv{i}_w"], self.params[f"conv{i}_b"])
            r = np.maximum(z, 0)
            pooled, idx = maxpool2x2(r)
            cache.append((a.shape, cols, z, idx))
            a = pooled
        flat_shape = a.shape
        a = a.reshape(a.shape[0], -1)
        z0 = a @ self.params["fc0_w"] + self.params["fc0_b"]
        h0 = np.maximum(z0, 0)
        logits = h0 @ self.params["fc1_w"] + self.params["fc1_b"]
        return logits, (cache, flat_shape, a, z0, h0)

    def predict_proba(self, X) -> np.ndarray:
        logits, _ = self._forward(self._check_batch(X))
        return softmax(logits.astype(np.float64))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def loss(self, X, targets) -> float:
        logits, _ = self._forward(self._check_batch(X))
        p = softmax(logits)
        t = np.asarray(targets, dtype=self.dtype)
        return float(-np.sum(t * np.log(np.maximum(p, np.finfo(p.dtype).tiny))) / p.shape[0])

    def loss_and_grads(self, X, targets):
        """Mean cross-entropy against one-hot or soft ``targets`` and its parameter gradients."""
        X = self._check_batch(X)
        targets = np.asarray(targets, dtype=self.dtype)
        logits, (cache, flat_shape, a, z0, h0) = self._forward(X)
        p = softmax(logits)
        n = X.shape[0]
        loss = float(-np.sum(targets * np.log(np.maximum(p, np.finfo(p.dtype).tiny))) / n)

        grads = {}
        dlogits = (p - targets) / n
        grads["fc1_w"] = h0.T @ dlogits
        grads["fc1_b"] = dlogits.sum(axis=0)
        dz0 = (dlogits @ self.params["fc1_w"].T) * (z0 > 0)
        grads["fc0_w"] = a.T @ dz0
        grads["fc0_b"] = dz0.sum(axis=0)
        da = (dz0 @ self.params["fc0_w"].T).reshape(flat_shape)
        for i in reversed(range(len(self.filters))):
            in_shape, cols, z, idx = cache[i]
            dz = maxpool2x2_backward(da, idx) * (z > 0)
            da, grads[f"conv{i}_w"], grads[f"conv{i}_b"] = conv2d_backward(
                dz, in_shape, cols, self.params[f"conv{i}_w"])
        return loss, grads

    # -- persistence ---------------------------------------------------------

    def to_state(self) -> dict:
        params = self.get_params()
        params["input_shape"] = list(params["input_shape"])
        params["filters"] = list(params["filters"])
        return {"params": params, "arrays": dict(self.params)}

    @classmethod
    def from_state(cls, state: dict) -> "TrafficNet":
        p = state["params"]
        model = cls(tuple(p["input_shape"]), p["n_classes"], tuple(p["filters"]), p["hidden"], p["seed"], p["dtype"])
        arrays = state["arrays"]
        if set(arrays) != set(model.params):
            raise ShapeError("stored parameter groups do not match the architecture")
        for k, v in arrays.items():
            if v.shape != model.params[k].shape:
                raise ShapeError(f"parameter {k} has shape {v.shape}, expected {model.params[k].shape}")
            model.params[k] = np.asarray(v, dtype=model.dtype)
        return model


def forward(model: TrafficNet, batch) -> np.ndarray:
    return model.predict_proba(batch)


def one_hot(labels, k: int, dtype=np.float64) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, k), dtype=dtype)
    out[np.arange(labels.size), labels] = 1
    return out


def train(model: TrafficNet, X, y, cfg: TrainConfig | None = None):
    """Mini-batch SGD with classical momentum on the cross-entropy.

    The sample order is reshuffled every epoch from a generator seeded by
    ``cfg.seed``. Returns ``(model, history)``; ``history`` holds the
    full-set loss before training and the mean batch loss and training
    accuracy of every epoch. Parameters are updated in place.
    """
    cfg = cfg or TrainConfig()
    X = model._check_batch(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DataError("training set is empty")
    if y.shape != (X.shape[0],):
        raise ShapeError("labels must be a vector aligned with the images")
    if y.min() < 0 or y.max() >= model.n_classes:
        raise DataError(f"labels must lie in 0..{model.n_classes - 1}")
    rng = np.random.default_rng(cfg.seed)
    targets = one_hot(y, model.n_classes, model.dtype)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    lr = model.dtype.type(cfg.learning_rate)
    mu = model.dtype.type(cfg.momentum)

    initial, _ = model.loss_and_grads(X, targets)
    history = {"initial_loss": initial, "loss": [], "accuracy": []}
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(X.shape[0])
        total_loss, correct = 0.0, 0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = X[idx]
            if cfg.augment:
                xb = np.stack([random_augment(img, rng) for img in xb]).astype(model.dtype)
            loss, grads = model.loss_and_grads(xb, targets[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"loss became non-finite in epoch {epoch}", epoch=epoch)
            total_loss += loss * idx.size
            for k, g in grads.items():
                velocity[k] = mu * velocity[k] - lr * g
                model.params[k] += velocity[k]
            correct += int(np.sum(model.predict(xb) == y[idx]))
        if not all(np.all(np.isfinite(v)) for v in model.params.values()):
            raise TrainingError(f"parameters became non-finite in epoch {epoch}", epoch=epoch)
        history["loss"].append(total_loss / X.shape[0])
        history["accuracy"].append(correct / X.shape[0])
    return model, history


def grad_check(model: TrafficNet, X, targets=None, step: float = 1e-5, seed: int = 0):
    """Largest relative error between analytic and central-difference gradients.

    Runs in float64 on a copy of ``model``. Per parameter group the error is
    ``|g_a - g_n| / max(|g_a| + |g_n|, 1e-12)`` in the Euclidean norm;
    the maximum over groups is returned together with the per-group dict.
    ``targets`` defaults to a random soft distribution per sample.
    """
    net = model.astype(np.float64)
    X = np.asarray(X, dtype=np.float64)
    if targets is None:
        t = np.random.default_rng(seed).random((X.shape[0] if X.ndim == 4 else 1, net.n_classes))
        targets = t / t.sum(axis=1, keepdims=True)
    _, analytic = net.loss_and_grads(X, targets)
    errors = {}
    for name, param in net.params.items():
        numeric = np.zeros_like(param)
        flat = param.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = net.loss(X, targets)
            flat[i] = orig - step
            down = net.loss(X, targets)
            flat[i] = orig
            nflat[i] = (up - down) / (2 * step)
        diff = np.linalg.norm(analytic[name] - numeric)
        errors[name] = float(diff / max(np.linalg.norm(analytic[name]) + np.linalg.norm(numeric), 1e-12))
    return max(errors.values()), errors

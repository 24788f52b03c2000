"""End-to-end acceptance checks, one test per criterion.

Each test appends a PASS/FAIL line to the log printed in the terminal
summary, then asserts.
"""

import hashlib
import json
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LOG
from trafficlens.cli import main
from trafficlens.datamodel import encode_features
from trafficlens.datasynth import gen_accidents, gen_images, gen_traffic, images_to_arrays
from trafficlens.metrics import bench_latency, confusion, evaluate, mann_whitney_auc, prf1, roc_auc
from trafficlens.pipeline import evaluate_severity, fit_severity, prepare_severity
from trafficlens.tabular import BoostedTreesClassifier, feature_importance, softmax_loss_grad
from trafficlens.timeseries import ArimaOrder, SeasonalARIMA, decompose, fit_arima, simulate_arma
from trafficlens.vision import TrafficNet, TrainConfig, grad_check, train

pytestmark = pytest.mark.acceptance


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
    ACCEPTANCE_LOG.append(line)
    print(line)
    assert ok, line


def test_01_arima_recovery():
    t0 = time.perf_counter()
    y = simulate_arma([0.5, -0.3], [0.4], 0.0, 1.0, 5000, seed=42)
    model = fit_arima(y, ArimaOrder(2, 0, 1))
    seconds = time.perf_counter() - t0
    errors = np.abs(np.r_[model.phi_, model.theta_] - [0.5, -0.3, 0.4])
    mae = model.fitted_mae()
    ok = errors.max() <= 0.1 and seconds < 10 and 0.7 <= mae <= 1.0
    record(1, "ARIMA(2,0,1) recovery", ok,
           f"phi={np.round(model.phi_, 3).tolist()} theta={np.round(model.theta_, 3).tolist()} "
           f"max|err|={errors.max():.3f} mae={mae:.3f} time={seconds:.2f}s")


def test_02_day_ahead_forecast():
    t0 = time.perf_counter()
    series = gen_traffic(sigma=2.0).values
    train_part, holdout = series[:-24], series[-24:]
    model = SeasonalARIMA(ArimaOrder(2, 0, 1), period=24).fit(train_part)
    mae = float(np.mean(np.abs(model.forecast(24).point - holdout)))
    seconds = time.perf_counter() - t0
    record(2, "24-hour forecast", mae <= 2.5 * 2.0 and seconds < 30,
           f"holdout MAE={mae:.3f} (bound 5.0) time={seconds:.2f}s")


def test_03_decomposition():
    n = 480
    series = gen_traffic(n=n, slope=0.5, daily_amplitude=10, weekly_amplitude=0, sigma=1.0).values
    d = decompose(series, 24)
    truth = 10 * np.sin(2 * np.pi * np.arange(n) / 24)
    corr = float(np.corrcoef(d.seasonal, truth)[0, 1])
    m = d.defined
    additivity = float(np.max(np.abs(d.observed[m] - (d.trend[m] + d.seasonal[m] + d.residual[m]))))
    record(3, "decomposition", corr > 0.99 and additivity < 1e-9,
           f"seasonal corr={corr:.5f} additivity={additivity:.1e}")


def test_04_severity_models():
    t0 = time.perf_counter()
    train_recs, test_recs = prepare_severity(gen_accidents(seed=42), "down", 0.7, seed=42)
    scores = {}
    for kind in ("gbdt", "rf"):
        model, _ = fit_severity(train_recs, kind, seed=42)
        rep = evaluate_severity(model, test_recs)
        scores[kind] = (rep.accuracy, rep.macro_f1)
    cb_train, cb_test = prepare_severity(gen_accidents(seed=42, checkerboard=True), "down", 0.7, seed=42)
    cb = {kind: evaluate_severity(fit_severity(cb_train, kind, seed=42)[0], cb_test).accuracy
          for kind in ("gbdt", "logistic")}
    seconds = time.perf_counter() - t0
    ok = (scores["gbdt"][0] >= 0.99 and scores["gbdt"][1] >= 0.99 and scores["rf"][0] >= 0.98
          and cb["gbdt"] - cb["logistic"] >= 0.05 and seconds < 120)
    record(4, "severity classifiers", ok,
           f"gbdt acc={scores['gbdt'][0]:.4f} f1={scores['gbdt'][1]:.4f} rf acc={scores['rf'][0]:.4f} "
           f"checkerboard gbdt={cb['gbdt']:.4f} logistic={cb['logistic']:.4f} time={seconds:.1f}s")


def test_05_importance_ranking():
    tops = {}
    for seed in (1, 2, 3):
        fm, y = encode_features(gen_accidents(seed=seed))
        model = BoostedTreesClassifier().fit(fm.values, y)
        tops[seed] = feature_importance(model, fm.columns).top(3)
    expected = {"weather", "road_type", "driver_age"}
    record(5, "importance ranking", all(set(t) == expected for t in tops.values()),
           " ".join(f"seed{s}={','.join(t)}" for s, t in tops.items()))


def test_06_cnn():
    t0 = time.perf_counter()
    X, y = images_to_arrays(gen_images())
    idx = np.random.default_rng(42).permutation(len(y))[:1000]
    X, y = X[idx].astype(np.float32), y[idx]
    net, history = train(TrafficNet(seed=42), X[:800], y[:800], TrainConfig(epochs=5, seed=42))
    acc = float(np.mean(net.predict(X[800:]) == y[800:]))
    seconds = time.perf_counter() - t0
    record(6, "CNN image classifier", acc >= 0.90 and seconds < 300,
           f"test acc={acc:.3f} final train loss={history['loss'][-1]:.4f} time={seconds:.1f}s")


def test_07_gradients():
    rng = np.random.default_rng(0)
    net = TrafficNet(input_shape=(8, 8, 1), filters=(4, 8), hidden=16, seed=3)
    cnn_err, _ = grad_check(net, rng.random((3, 8, 8, 1)))
    X = rng.normal(size=(50, 6))
    target = np.eye(3)[rng.integers(0, 3, 50)]
    W = rng.normal(size=(3, 7))
    _, grad = softmax_loss_grad(W, X, target, 1e-3)
    num = np.zeros_like(W)
    for i in np.ndindex(W.shape):
        step = np.zeros_like(W)
        step[i] = 1e-6
        num[i] = (softmax_loss_grad(W + step, X, target, 1e-3)[0]
                  - softmax_loss_grad(W - step, X, target, 1e-3)[0]) / 2e-6
    lr_err = float(np.linalg.norm(grad - num) / np.linalg.norm(grad + num))
    record(7, "gradient checks", cnn_err < 1e-4 and lr_err < 1e-5,
           f"cnn max rel err={cnn_err:.2e} softmax regression rel err={lr_err:.2e}")


def test_08_metric_oracles():
    worst_auc = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        actual = rng.integers(0, 2, 80)
        actual[:2] = (0, 1)
        scores = np.round(rng.random(80), 1)
        worst_auc = max(worst_auc, abs(roc_auc(scores, actual).auc - mann_whitney_auc(scores, actual)))
    rng = np.random.default_rng(500)
    a, p = rng.integers(0, 3, 500), rng.integers(0, 3, 500)
    tally = np.zeros((3, 3), dtype=int)
    for i, j in zip(a, p):
        tally[i, j] += 1
    m = prf1(confusion(a, p, 3))
    brute_ok = np.array_equal(confusion(a, p, 3).counts, tally) and all(
        np.isclose(m.precision[k], np.sum((a == k) & (p == k)) / np.sum(p == k))
        and np.isclose(m.recall[k], np.sum((a == k) & (p == k)) / np.sum(a == k)) for k in range(3))
    y = np.repeat([0, 1, 2], 20)
    perfect = evaluate(y, y, np.eye(3)[y])
    perfect_ok = (perfect.accuracy, perfect.macro_precision, perfect.macro_recall, perfect.macro_f1) == (1, 1, 1, 1)
    record(8, "metric oracles", worst_auc < 1e-9 and brute_ok and perfect_ok,
           f"max |trapezoid - MW|={worst_auc:.1e} brute force={'ok' if brute_ok else 'mismatch'} "
           f"perfect row={'1.00' if perfect_ok else 'wrong'}")


def test_09_latency():
    train_recs, _ = prepare_severity(gen_accidents(seed=42), "down", 0.7, seed=42)
    model, _ = fit_severity(train_recs, "gbdt", seed=42)
    X = model.transform(train_recs[:200])
    gbdt = bench_latency(model.estimator.predict, X, repetitions=200)
    floor = bench_latency(lambda x: np.zeros(len(x)), X, repetitions=200)
    record(9, "inference latency", gbdt["p95_ms"] < 30 and floor["p50_ms"] < 1,
           f"gbdt p50={gbdt['p50_ms']:.3f}ms p95={gbdt['p95_ms']:.3f}ms "
           f"constant p50={floor['p50_ms'] * 1e3:.1f}us")


def _pipeline_digest(root):
    """Run synth -> train (split inside) -> evaluate through the CLI and hash every output."""
    steps = [
        ["synth", "accidents", "--out", root, "--n", "3000"],
        ["synth", "traffic", "--out", root, "--n", "1000"],
        ["synth", "images", "--out", root, "--n", "200"],
        ["train-severity", "--data", root / "accidents.csv", "--out", root / "gbdt.tlns", "--rounds", "30"],
        ["train-severity", "--data", root / "accidents.csv", "--model", "rf", "--n-trees", "20",
         "--out", root / "rf.tlns"],
        ["train-severity", "--data", root / "accidents.csv", "--model", "logistic", "--out", root / "lr.tlns"],
        ["fit-arima", "--series", root / "traffic.csv", "--out", root / "arima.tlns"],
        ["forecast", "--model", root / "arima.tlns", "--out", root / "forecast.csv"],
        ["train-image", "--dir", root / "images", "--epochs", "2", "--out", root / "cnn.tlns"],
        ["evaluate", "--model", root / "gbdt.tlns", "--data", root / "accidents.csv", "--report", root / "ev.json"],
        ["evaluate", "--model", root / "cnn.tlns", "--data", root / "images", "--report", root / "evc.json"],
    ]
    for argv in steps:
        assert main([str(a) for a in argv]) == 0, argv
    digests = {}
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        data = path.read_bytes()
        if path.suffix == ".json":
            report = json.loads(data)
            report.pop("wall_time")
            # reports echo resolved paths, which differ between the two run roots
            data = json.dumps(report, sort_keys=True).replace(str(root), "<root>").encode()
        digests[str(path.relative_to(root))] = hashlib.sha256(data).hexdigest()
    return digests


def test_10_determinism(tmp_path):
    a = _pipeline_digest(tmp_path / "a")
    b = _pipeline_digest(tmp_path / "b")
    differing = sorted(k for k in a if a[k] != b.get(k))
    record(10, "determinism", a.keys() == b.keys() and not differing,
           f"{len(a)} files compared, {len(differing)} differ" + (f" ({', '.join(differing[:3])})" if differing else ""))

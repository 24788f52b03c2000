import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trafficlens.exceptions import ConfigError, DegenerateDataError, LabelError, ShapeError
from trafficlens.metrics import (
    REFERENCE_LATENCY_MS,
    ConfusionMatrix,
    bench_latency,
    bench_scaling,
    confusion,
    evaluate,
    mann_whitney_auc,
    prf1,
    roc_auc,
    scaling_csv,
)
from trafficlens.tabular import BoostedTreesClassifier, SoftmaxRegression
from trafficlens.vision import TrafficNet, TrainConfig, train


def brute_auc(scores, actual):
    pos = [s for s, a in zip(scores, actual) if a]
    neg = [s for s, a in zip(scores, actual) if not a]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_perfect(self):
        y = np.array([0, 1, 1, 2, 2, 2])
        cm = confusion(y, y, 3)
        assert np.array_equal(cm.counts, np.diag([1, 2, 3]))

    def test_hand_count(self):
        assert confusion([0, 0, 1], [0, 1, 1], 2).counts.tolist() == [[1, 1], [0, 1]]

    def test_naive_oracle(self):
        rng = np.random.default_rng(0)
        a, p = rng.integers(0, 4, 500), rng.integers(0, 4, 500)
        naive = np.zeros((4, 4), dtype=int)
        for i, j in zip(a, p):
            naive[i, j] += 1
        assert np.array_equal(confusion(a, p, 4).counts, naive)
        assert confusion(a, p, 4).total == 500

    def test_label_out_of_range(self):
        with pytest.raises(LabelError):
            confusion([0, 3], [0, 1], 3)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            confusion([0, 1], [0], 2)


class TestPRF1:
    def test_diagonal_all_ones(self):
        m = prf1(ConfusionMatrix(np.diag([10, 20, 30])))
        assert m.accuracy == m.macro_precision == m.macro_recall == m.macro_f1 == 1.0
        assert not m.warnings

    def test_never_predicted(self):
        m = prf1(ConfusionMatrix(np.array([[5, 0, 0], [0, 5, 0], [3, 2, 0]])))
        assert m.precision[2] == 0.0 and m.recall[2] == 0.0
        assert any("precision" in w for w in m.warnings)
        assert m.macro_precision == pytest.approx((5 / 8 + 5 / 7 + 0) / 3)

    def test_hand_computed(self):
        m = prf1(ConfusionMatrix(np.array([[50, 10], [5, 35]])))
        p0, r0 = 50 / 55, 50 / 60
        assert m.precision[0] == pytest.approx(p0)
        assert m.recall[0] == pytest.approx(r0)
        assert m.f1[0] == pytest.approx(2 * p0 * r0 / (p0 + r0))
        assert m.accuracy == 0.85

    def test_brute_force_500(self):
        rng = np.random.default_rng(1)
        a, p = rng.integers(0, 3, 500), rng.integers(0, 3, 500)
        m = prf1(confusion(a, p, 3))
        for k in range(3):
            tp = np.sum((a == k) & (p == k))
            assert m.precision[k] == pytest.approx(tp / np.sum(p == k), abs=1e-15)
            assert m.recall[k] == pytest.approx(tp / np.sum(a == k), abs=1e-15)
        assert m.accuracy == np.mean(a == p)

    def test_empty(self):
        with pytest.raises(ShapeError):
            prf1(ConfusionMatrix(np.zeros((2, 2), dtype=int)))


@settings(max_examples=50, deadline=None)
@given(counts=st.lists(st.integers(0, 30), min_size=9, max_size=9), perm=st.permutations(range(3)))
def test_prf1_label_symmetry(counts, perm):
    c = np.array(counts).reshape(3, 3)
    if c.sum() == 0:
        return
    perm = np.array(perm)
    a, b = prf1(ConfusionMatrix(c)), prf1(ConfusionMatrix(c[np.ix_(perm, perm)]))
    np.testing.assert_allclose(b.precision, a.precision[perm])
    np.testing.assert_allclose(b.recall, a.recall[perm])
    np.testing.assert_allclose(b.f1, a.f1[perm])
    assert a.accuracy == np.trace(c) / c.sum()


class TestRoc:
    def test_perfect(self):
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]).auc == 1.0

    def test_all_ties(self):
        assert roc_auc(np.full(6, 0.3), [1, 0, 1, 0, 0, 1]).auc == 0.5

    def test_pairwise_example(self):
        assert roc_auc([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]).auc == pytest.approx(0.75, abs=1e-12)
        assert brute_auc([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) == 0.75

    def test_single_class(self):
        with pytest.raises(DegenerateDataError):
            roc_auc([0.1, 0.2], [1, 1])

    def test_csv(self):
        text = roc_auc([0.9, 0.1], [1, 0]).to_csv()
        assert text.splitlines()[0] == "threshold,fpr,tpr"
        assert len(text.splitlines()) == 4


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 60), discrete=st.booleans())
def test_auc_trapezoid_equals_mann_whitney(seed, n, discrete):
    rng = np.random.default_rng(seed)
    actual = rng.integers(0, 2, n)
    actual[0], actual[1] = 0, 1
    scores = rng.integers(0, 5, n) / 4 if discrete else rng.random(n)
    curve = roc_auc(scores, actual)
    assert abs(curve.auc - mann_whitney_auc(scores, actual)) < 1e-9
    assert abs(curve.auc - brute_auc(scores, actual)) < 1e-9
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0) and (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    assert 0.0 <= curve.auc <= 1.0


class TestEvaluate:
    def test_perfect_classifier(self):
        y = np.repeat([0, 1, 2], 10)
        rep = evaluate(y, y, proba=np.eye(3)[y], labels=("Low", "Medium", "High"))
        d = rep.to_dict()
        assert d["accuracy"] == 1.0 and d["macro"] == {"precision": 1.0, "recall": 1.0, "f1": 1.0}
        assert rep.auc == [1.0, 1.0, 1.0]
        assert d["averaging"] == "macro"

    def test_macro_is_mean(self):
        rng = np.random.default_rng(2)
        a, p = rng.integers(0, 3, 200), rng.integers(0, 3, 200)
        rep = evaluate(a, p)
        assert rep.macro_f1 == pytest.approx(np.mean(rep.f1))

    def test_missing_class_auc(self):
        rep = evaluate([0, 0, 1], [0, 1, 1], proba=np.full((3, 3), 1 / 3))
        assert rep.auc[2] is None and any("AUC" in w for w in rep.warnings)

    def test_csv(self):
        text = evaluate([0, 1], [0, 1]).to_csv()
        assert text.splitlines()[0] == "class,precision,recall,f1,auc"
        assert text.splitlines()[-1].startswith("accuracy,1.0")


class TestLatency:
    def test_constant_predictor_floor(self):
        stats = bench_latency(lambda x: np.zeros(len(x)), np.zeros((5, 3)), repetitions=200)
        assert stats["p50_ms"] < 1.0
        assert stats["repetitions"] == 200 and stats["warmup"] == 10 and stats["hardware"]

    def test_minimum_repetitions(self):
        with pytest.raises(ConfigError):
            bench_latency(lambda x: x, np.zeros((1, 1)), repetitions=10)

    def test_gbdt_bound(self, accidents_small):
        from trafficlens.datamodel import encode_features

        fm, y = encode_features(accidents_small)
        model = BoostedTreesClassifier(n_rounds=50).fit(fm.values, y)
        stats = bench_latency(model.predict, fm.values, repetitions=100)
        assert stats["p95_ms"] < 30.0

    def test_reference_points(self):
        assert REFERENCE_LATENCY_MS == {"gbdt": 4.2, "rf": 5.7, "logistic": 1.2, "cnn": 28.5}


class TestScaling:
    def test_three_sizes(self):
        rows = bench_scaling(BoostedTreesClassifier(n_rounds=10).fit, [500, 1000, 2000])
        assert [s for s, _ in rows] == [500, 1000, 2000]
        for (_, a), (_, b) in zip(rows, rows[1:]):
            assert b >= 0.5 * a
        assert scaling_csv(rows).startswith("size,train_seconds\n")

    def test_single_size(self):
        assert len(bench_scaling(SoftmaxRegression(steps=5).fit, [300])) == 1

    def test_must_ascend(self):
        with pytest.raises(ConfigError):
            bench_scaling(SoftmaxRegression().fit, [200, 100])

    def test_cnn_slower_than_logistic(self):
        def images(size, seed):
            rng = np.random.default_rng(seed)
            return rng.random((size, 16, 16, 1)), rng.integers(0, 4, size)

        def fit_cnn(X, y):
            train(TrafficNet(input_shape=(16, 16, 1)), X, y, TrainConfig(epochs=1))

        def fit_lr(X, y):
            SoftmaxRegression(steps=50).fit(X.reshape(len(X), -1), y)

        cnn = bench_scaling(fit_cnn, [200], make_data=images)[0][1]
        lr = bench_scaling(fit_lr, [200], make_data=images)[0][1]
        assert cnn > lr

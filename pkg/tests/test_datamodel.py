import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trafficlens.datamodel import (
    AccidentRecord,
    FeatureEncoder,
    FeatureMatrix,
    ImageClass,
    ImageSample,
    Severity,
    SplitSpec,
    TrafficSeries,
    encode_features,
    split,
    split_indices,
)
from trafficlens.exceptions import ConfigError, DataError, SchemaError


class TestLabels:
    def test_severity_encoding(self):
        assert [int(Severity.parse(s)) for s in ("Low", "Medium", "High")] == [0, 1, 2]
        assert Severity.parse(2) is Severity.HIGH

    def test_image_class_encoding(self):
        assert [c.label for c in ImageClass] == ["clear", "congested", "construction", "accident"]

    def test_bad_token(self):
        with pytest.raises(ValueError):
            Severity.parse("Extreme")


class TestTypes:
    def test_series_rejects_negative(self):
        with pytest.raises(DataError):
            TrafficSeries([1.0, -1.0])

    def test_series_rejects_empty(self):
        with pytest.raises(DataError):
            TrafficSeries([])

    def test_series_timestamps(self):
        s = TrafficSeries([1, 2, 3], start_time=100)
        assert s.timestamps.tolist() == [100, 101, 102]

    def test_image_bounds(self):
        with pytest.raises(DataError):
            ImageSample(np.full((8, 8, 1), 1.5), "clear")
        with pytest.raises(DataError):
            ImageSample(np.zeros((4, 8, 1)), "clear")

    def test_feature_matrix_width(self):
        with pytest.raises(SchemaError):
            FeatureMatrix(np.zeros((2, 3)), ())


class TestEncodeFeatures:
    def test_single_category(self):
        fm, y = encode_features([AccidentRecord({"weather": "rain"}, "Low")])
        assert fm.values.tolist() == [[1.0]]
        assert y.tolist() == [0]

    def test_two_point_standardization(self):
        recs = [AccidentRecord({"x": 2.0}, "Low"), AccidentRecord({"x": 4.0}, "High")]
        fm, _ = encode_features(recs)
        np.testing.assert_allclose(fm.values[:, 0], [-1.0, 1.0])

    def test_against_hand_encoder(self, toy_records):
        fm, y = encode_features(toy_records)
        ages = np.array([20.0, 40.0, 60.0, 80.0])
        z = (ages - ages.mean()) / ages.std()
        # columns sorted by feature name, then category: age, weather=clear, weather=rain
        expected = np.column_stack([z, [0, 1, 0, 1], [1, 0, 1, 0]])
        np.testing.assert_allclose(fm.values, expected, atol=1e-12)
        assert [c.name for c in fm.columns] == ["age", "weather=clear", "weather=rain"]
        assert y.tolist() == [2, 0, 1, 0]

    def test_heterogeneous_schema(self):
        recs = [AccidentRecord({"a": 1.0}, "Low"), AccidentRecord({"b": 1.0}, "Low")]
        with pytest.raises(SchemaError):
            encode_features(recs)

    def test_non_finite(self):
        recs = [AccidentRecord({"a": 1.0}, "Low"), AccidentRecord({"a": float("nan")}, "Low")]
        with pytest.raises(DataError):
            encode_features(recs)

    def test_missing_values(self):
        recs = [AccidentRecord({"w": None, "x": 1.0}, "Low"), AccidentRecord({"w": "rain", "x": None}, "Low"),
                AccidentRecord({"w": "rain", "x": 3.0}, "Low")]
        enc = FeatureEncoder().fit(recs)
        assert enc.categories_["w"] == ["rain", "unknown"]
        assert enc.medians_["x"] == 2.0
        assert np.all(np.isfinite(enc.transform(recs)))

    def test_unseen_category_is_all_zero(self, toy_records):
        enc = FeatureEncoder().fit(toy_records)
        row = enc.transform([AccidentRecord({"weather": "snow", "age": 50.0}, "Low")])
        assert row[0, 1:].tolist() == [0.0, 0.0]

    def test_train_statistics_are_frozen(self, toy_records):
        enc = FeatureEncoder().fit(toy_records)
        new = enc.transform([AccidentRecord({"weather": "rain", "age": 50.0}, "Low")])
        assert new[0, 0] == pytest.approx(0.0)

    def test_state_round_trip(self, toy_records):
        enc = FeatureEncoder().fit(toy_records)
        again = FeatureEncoder.from_state(enc.to_state())
        np.testing.assert_array_equal(enc.transform(toy_records), again.transform(toy_records))

    def test_onehot_groups_sum_to_one(self, accidents_small):
        fm, _ = encode_features(accidents_small)
        sources = np.array(fm.sources)
        for name in set(c.source for c in fm.columns if c.kind == "onehot"):
            np.testing.assert_array_equal(fm.values[:, sources == name].sum(axis=1), 1.0)

    def test_column_order_stable(self, accidents_small):
        a, _ = encode_features(accidents_small)
        b, _ = encode_features(list(reversed(accidents_small)))
        assert [c.name for c in a.columns] == [c.name for c in b.columns]


class TestSplit:
    def test_partition(self):
        train, test = split(list(range(10)), SplitSpec(0.8, seed=7))
        assert len(train) == 8 and len(test) == 2
        assert sorted(train + test) == list(range(10))

    def test_stratified(self):
        labels = np.array(["A"] * 6 + ["B"] * 4)
        train, _ = split_indices(10, SplitSpec(0.5, 0, stratify=True), labels)
        assert (labels[train] == "A").sum() == 3 and (labels[train] == "B").sum() == 2

    def test_seed_determinism(self):
        a = split_indices(100, SplitSpec(0.5, 3))
        b = split_indices(100, SplitSpec(0.5, 3))
        c = split_indices(100, SplitSpec(0.5, 4))
        assert np.array_equal(a[0], b[0])
        assert not np.array_equal(a[0], c[0])

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_bad_fraction(self, fraction):
        with pytest.raises(ConfigError):
            SplitSpec(fraction)

    def test_too_small(self):
        with pytest.raises(DataError):
            split_indices(1, SplitSpec())


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 200), fraction=st.floats(0.05, 0.95), seed=st.integers(0, 2**32 - 1))
def test_split_is_partition(n, fraction, seed):
    train, test = split_indices(n, SplitSpec(fraction, seed))
    assert train.size + test.size == n
    assert np.intersect1d(train, test).size == 0
    assert np.union1d(train, test).tolist() == list(range(n))


@settings(max_examples=60, deadline=None)
@given(labels=st.lists(st.integers(0, 2), min_size=2, max_size=120), fraction=st.floats(0.1, 0.9),
       seed=st.integers(0, 1000))
def test_stratified_preserves_ratio(labels, fraction, seed):
    labels = np.asarray(labels)
    train, test = split_indices(labels.size, SplitSpec(fraction, seed, stratify=True), labels)
    assert train.size + test.size == labels.size
    for c in np.unique(labels):
        count = np.count_nonzero(labels == c)
        assert abs(np.count_nonzero(labels[train] == c) - fraction * count) <= 1


@settings(max_examples=40, deadline=None)
@given(rows=st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.floats(-1e3, 1e3)), min_size=1, max_size=30))
def test_encode_round_trip(rows):
    recs = [AccidentRecord({"cat": c, "num": x}, "Low") for c, x in rows]
    enc = FeatureEncoder().fit(recs)
    decoded = enc.inverse_transform(enc.transform(recs))
    for (c, x), back in zip(rows, decoded):
        assert back["cat"] == c
        assert back["num"] == pytest.approx(x, abs=1e-9)

import json

import numpy as np
import pytest

from edgebot import evaluate as E
from edgebot import preprocess as pp
from edgebot.errors import (
    DataError,
    EmptyMatrix,
    InvalidParams,
    LengthMismatch,
    NoPositiveRows,
)


class TestHyperParams:
    def test_table3_rows_validate(self):
        for hp in E.TABLE3.values():
            hp.validate()

    def test_field_not_meaningful_for_kind(self):
        with pytest.raises(InvalidParams):
            E.HyperParams(model="rf", learning_rate=0.1).validate()
        with pytest.raises(InvalidParams):
            E.HyperParams(model="xgb", num_leaves=31).validate()

    def test_round_trip_dict(self):
        hp = E.TABLE3["lgbm"]
        assert E.HyperParams.from_dict(hp.to_dict()) == hp

    def test_gbdt_param_mapping(self):
        params = E.TABLE3["xgb"].to_gbdt_params()
        assert params.max_depth == 6
        assert params.n_estimators == 100
        assert params.subsample == 1.0
        assert params.learning_rate == 0.1
        assert params.colsample_bytree == 0.8
        assert params.gamma == 0.1

    def test_forest_param_mapping(self):
        params = E.TABLE3["rf"].to_forest_params()
        assert params.max_depth == 6
        assert params.n_estimators == 100
        assert params.min_samples_split == 10
        assert params.min_samples_leaf == 4
        assert params.max_features == "sqrt"


class TestParamSpace:
    def test_draws_are_valid_and_deterministic(self):
        space = E.ParamSpace(model="rf", choices={
            "max_depth": [2, 4, 6],
            "n_estimators": ("int", 5, 20),
        }, n_iter=5, seed=3)
        a = [space.draw(i) for i in range(5)]
        b = [space.draw(i) for i in range(5)]
        assert a == b
        for hp in a:
            hp.validate()
            assert 5 <= hp.n_estimators <= 20

    def test_uniform_range(self):
        space = E.ParamSpace(model="xgb", choices={
            "learning_rate": ("uniform", 0.01, 0.3),
        }, n_iter=3, seed=0)
        for i in range(3):
            assert 0.01 <= space.draw(i).learning_rate <= 0.3


class TestRandomSearch:
    def test_single_trial_wins(self, small_split):
        space = E.ParamSpace(model="rf", choices={
            "max_depth": [3], "n_estimators": [5],
        }, n_iter=1, seed=0)
        best, trials = E.random_search(space, small_split.train,
                                       small_split.validation)
        assert best.max_depth == 3
        assert len(trials) == 1
        assert trials[0].score is not None

    def test_same_seed_identical_trial_log(self, small_split):
        space = E.ParamSpace(model="rf", choices={
            "max_depth": [1, 3, 6], "n_estimators": [3, 6],
        }, n_iter=4, seed=5)
        _, t1 = E.random_search(space, small_split.train, small_split.validation)
        _, t2 = E.random_search(space, small_split.train, small_split.validation)
        assert [t.to_dict() for t in t1] == [t.to_dict() for t in t2]

    def test_winner_achieves_max_logged_score(self, small_split):
        space = E.ParamSpace(model="rf", choices={
            "max_depth": [1, 2, 6], "n_estimators": [2, 8],
        }, n_iter=6, seed=2)
        best, trials = E.random_search(space, small_split.train,
                                       small_split.validation)
        scores = [t.score for t in trials if t.score is not None]
        winner = [t for t in trials if t.params == best][0]
        assert winner.score == max(scores)

    def test_table3_row_selected_when_it_dominates(self):
        # Conjunction of three thresholds: greedy splits see the marginal
        # signal but depth 1 and 2 cannot finish the rule, so the Table-3
        # row wins outright.
        rng = np.random.default_rng(4)
        n = 2000
        X = rng.normal(size=(n, 6))
        target = ((X[:, 0] > 0) & (X[:, 1] > 0) & (X[:, 2] > 0)).astype(int)
        y = (target ^ (rng.random(n) < 0.05)).astype(int)
        ds = pp.Dataset([f"f{i}" for i in range(6)], [pp.KIND_NUMERIC] * 6, X, y)
        split = pp.split(ds, seed=1)
        space = E.ParamSpace(model="rf", choices={
            "max_depth": [1, 2, 6],
            "n_estimators": [100],
            "min_samples_split": [10],
            "min_samples_leaf": [4],
            "max_features": ["sqrt"],
        }, n_iter=8, seed=0)
        best, trials = E.random_search(space, split.train, split.validation)
        drawn_depths = {t.params.max_depth for t in trials}
        assert {1, 2, 6}.issubset(drawn_depths)  # rivals really competed
        assert best == E.TABLE3["rf"]

    def test_failing_trial_logged_not_fatal(self, small_split):
        space = E.ParamSpace(model="rf", choices={
            "max_depth": [-3, 4], "n_estimators": [4],
        }, n_iter=6, seed=1)
        best, trials = E.random_search(space, small_split.train,
                                       small_split.validation)
        failed = [t for t in trials if t.error is not None]
        ok = [t for t in trials if t.score is not None]
        assert failed and ok
        assert best.max_depth == 4

    def test_all_failures_raise(self, small_split):
        space = E.ParamSpace(model="rf", choices={
            "max_depth": [-1], "n_estimators": [4],
        }, n_iter=2, seed=1)
        with pytest.raises(DataError):
            E.random_search(space, small_split.train, small_split.validation)


class TestConfusion:
    def test_perfect_predictor(self):
        labels = np.array([1] * 10 + [0] * 10)
        cm = E.confusion(labels, labels)
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (10, 10, 0, 0)

    def test_all_positive_predictor(self):
        labels = np.array([1] * 10 + [0] * 10)
        cm = E.confusion(np.ones(20, dtype=int), labels)
        assert (cm.tp, cm.fp) == (10, 10)

    def test_matches_counting_oracle(self, rng):
        pred = rng.integers(0, 2, size=500)
        labels = rng.integers(0, 2, size=500)
        cm = E.confusion(pred, labels)
        want = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
        for p, a in zip(pred, labels):
            key = ("t" if p == a else "f") + ("p" if p == 1 else "n")
            want[key] += 1
        assert cm.to_dict() == want
        assert cm.total == 500

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            E.confusion([1], [1, 0])


class TestMetrics:
    def test_balanced_90(self):
        cm = E.ConfusionMatrix(tp=90, fp=10, fn=10, tn=90)
        m = E.metrics(cm)
        for key in ("accuracy", "precision", "recall", "f1"):
            assert m[key] == pytest.approx(0.9)

    def test_zero_fp_perfect_precision(self):
        m = E.metrics(E.ConfusionMatrix(tp=5, fp=0, fn=3, tn=2))
        assert m["precision"] == 1.0

    def test_undefined_recall_flagged_none(self):
        m = E.metrics(E.ConfusionMatrix(tp=0, fp=2, fn=0, tn=8))
        assert m["recall"] is None
        assert m["fnr"] is None

    def test_identities_on_random_matrices(self, rng):
        for _ in range(500):
            cm = E.ConfusionMatrix(*[int(v) for v in rng.integers(1, 500, size=4)])
            m = E.metrics(cm)
            f1 = 2.0 / (1.0 / m["precision"] + 1.0 / m["recall"])
            assert abs(m["f1"] - f1) <= 1e-12
            assert abs(m["fnr"] - (1.0 - m["recall"])) <= 1e-12
            assert abs(m["fpr"] - (1.0 - m["specificity"])) <= 1e-12

    def test_empty_matrix(self):
        with pytest.raises(EmptyMatrix):
            E.metrics(E.ConfusionMatrix())


class TestDetectionProbability:
    def test_strong_model_detects_most_attacks(self, small_split):
        model = E.train_model(E.HyperParams(model="rf", n_estimators=10,
                                            max_depth=6), small_split.train, seed=0)
        dp = E.detection_probability(model, small_split.test)
        assert dp >= 0.97

    def test_equals_recall_definitionally(self, small_split):
        model = E.train_model(E.HyperParams(model="rf", n_estimators=5,
                                            max_depth=4), small_split.train, seed=1)
        pred = E.predict_classes(model, small_split.test.values)
        cm = E.confusion(pred, small_split.test.labels)
        assert E.detection_probability(model, small_split.test) == pytest.approx(
            E.metrics(cm)["recall"]
        )

    def test_no_positive_rows(self, small_split):
        benign_only = small_split.test.take(
            np.flatnonzero(small_split.test.labels == 0)
        )
        model = E.train_model(E.HyperParams(model="rf", n_estimators=3,
                                            max_depth=3), small_split.train, seed=0)
        with pytest.raises(NoPositiveRows):
            E.detection_probability(model, benign_only)


class TestInjectNoise:
    def test_sigma_zero_is_bit_identical(self, small_split):
        out = E.inject_noise(small_split.test, E.NoiseSpec(sigma=0.0, seed=1))
        assert np.array_equal(out.values, small_split.test.values)

    def test_moment_check(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(10000, 1))
        ds = pp.Dataset(["x"], [pp.KIND_NUMERIC], values,
                        labels=np.zeros(10000, dtype=int), scaled=True)
        noisy = E.inject_noise(ds, E.NoiseSpec(sigma=0.1, seed=4))
        delta = noisy.values[:, 0] - values[:, 0]
        assert abs(delta.std() - 0.1) < 0.01
        assert abs(delta.mean()) < 0.01

    def test_bit_columns_untouched(self, small_split):
        noisy = E.inject_noise(small_split.test, E.NoiseSpec(sigma=0.5, seed=2))
        bits = ~small_split.test.numeric_columns()
        assert np.array_equal(noisy.values[:, bits],
                              small_split.test.values[:, bits])

    def test_original_unmodified_and_deterministic(self, small_split):
        before = small_split.test.values.copy()
        a = E.inject_noise(small_split.test, E.NoiseSpec(sigma=0.2, seed=9))
        b = E.inject_noise(small_split.test, E.NoiseSpec(sigma=0.2, seed=9))
        assert np.array_equal(small_split.test.values, before)
        assert np.array_equal(a.values, b.values)

    def test_unscaled_dataset_uses_scaler_std(self):
        values = np.array([[0.0], [10.0], [20.0]])
        scaler = pp.ScalerParams(["x"], np.array([10.0]), np.array([5.0]))
        ds = pp.Dataset(["x"], [pp.KIND_NUMERIC], values,
                        labels=None, scaled=False, scaler=scaler)
        noisy = E.inject_noise(ds, E.NoiseSpec(sigma=1.0, seed=0))
        delta = noisy.values - values
        assert delta.std() > 1.0  # draws at sigma*std = 5, not 1


class TestBenchmark:
    def test_smoke_and_determinism(self, small_split):
        hp = E.HyperParams(model="xgb", n_estimators=4, learning_rate=0.3,
                           max_depth=3)
        r1 = E.benchmark(hp, small_split.train, small_split.test, seed=3, repeats=1)
        r2 = E.benchmark(hp, small_split.train, small_split.test, seed=3, repeats=1)
        assert r1.model_size_bytes == r2.model_size_bytes
        assert r1.training_time_s > 0
        assert r1.metrics["accuracy"] is not None
        assert r1.host and "machine" in r1.host

    def test_empty_test_split_flagged_undefined(self, small_split):
        empty = small_split.test.take(np.array([], dtype=int))
        hp = E.HyperParams(model="rf", n_estimators=2, max_depth=2)
        report = E.benchmark(hp, small_split.train, empty, seed=0, repeats=1)
        assert report.inference_time_s == 0.0
        assert report.metrics["accuracy"] is None

    def test_report_json_canonical(self, small_split):
        hp = E.HyperParams(model="rf", n_estimators=2, max_depth=2)
        report = E.benchmark(hp, small_split.train, small_split.test, seed=0,
                             repeats=1)
        text = report.to_json()
        payload = json.loads(text)
        assert list(payload) == sorted(payload)
        stable = report.to_json(include_volatile=False)
        assert "training_time_s" not in json.loads(stable)

    def test_format_table_contains_undefined(self):
        report = E.EvalReport(model="rf", metrics={"accuracy": None})
        table = E.format_report_table([report])
        assert "undefined" in table

import struct

import numpy as np
import pytest

from edgebot import artifact as A
from edgebot import boosting, evaluate, forest, synth
from edgebot.errors import (
    ArtifactError,
    ChecksumMismatch,
    TruncatedArtifact,
    UnsupportedVersion,
)


@pytest.fixture(scope="module")
def trained(small_split_module):
    split = small_split_module
    models = {
        "rf": forest.train_forest(split.train, forest.ForestParams(n_estimators=8),
                                  seed=1),
        "xgb": boosting.train_xgb(
            split.train,
            boosting.GbdtParams(mode="xgb", n_estimators=6, learning_rate=0.3,
                                colsample_bytree=0.8, reg_lambda=1.0),
            seed=1),
        "lgbm": boosting.train_lgbm(
            split.train,
            boosting.GbdtParams(mode="lgbm", n_estimators=6, learning_rate=0.1,
                                num_leaves=15, min_child_samples=5,
                                goss=boosting.GossConfig(0.3, 0.3),
                                efb_conflict_budget=0),
            seed=1),
    }
    return split, models


@pytest.fixture(scope="module")
def small_split_module():
    from edgebot import preprocess

    ds = synth.synthetic_dataset(2500, seed=21)
    return preprocess.split(ds, seed=3)


def _blob(model, split, seed=1):
    return A.serialize_model(
        model,
        scaler=split.train.scaler,
        feature_names=list(split.train.feature_names),
        feature_kinds=list(split.train.feature_kinds),
        seed=seed,
        fingerprint=A.dataset_fingerprint(split.train),
    )


class TestRoundTrip:
    @pytest.mark.parametrize("kind", ["rf", "xgb", "lgbm"])
    def test_predictions_identical_on_1000_inputs(self, trained, kind, rng):
        split, models = trained
        model = models[kind]
        blob = _blob(model, split)
        loaded = A.deserialize(blob)
        probes = rng.normal(size=(1000, split.train.n_features))
        want = evaluate.predict_classes(model, probes)
        want_scores = evaluate.predict_scores(model, probes)
        got, got_scores = loaded.predict_matrix(probes)
        assert np.array_equal(want, got)
        assert np.array_equal(want_scores, got_scores)

    def test_serialization_deterministic(self, trained):
        split, models = trained
        assert _blob(models["xgb"], split) == _blob(models["xgb"], split)

    def test_size_reported(self, trained):
        split, models = trained
        blob = _blob(models["rf"], split)
        assert A.deserialize(blob).size_bytes == len(blob)

    def test_params_survive(self, trained):
        split, models = trained
        loaded = A.deserialize(_blob(models["lgbm"], split))
        assert loaded.model.params.num_leaves == 15
        assert loaded.model.params.goss.a == 0.3
        assert loaded.model.bundle is not None


class TestIntegrity:
    def test_any_flipped_byte_is_detected(self, trained, rng):
        split, models = trained
        blob = bytearray(_blob(models["xgb"], split))
        for _ in range(12):
            pos = int(rng.integers(0, len(blob) - A.CHECKSUM_BYTES))
            corrupted = bytearray(blob)
            corrupted[pos] ^= 0xFF
            with pytest.raises((ChecksumMismatch, UnsupportedVersion, ArtifactError)):
                A.deserialize(bytes(corrupted))

    def test_truncated(self, trained):
        split, models = trained
        blob = _blob(models["rf"], split)
        with pytest.raises((TruncatedArtifact, ChecksumMismatch)):
            A.deserialize(blob[: len(blob) // 2])
        with pytest.raises(TruncatedArtifact):
            A.deserialize(blob[:10])

    def test_unsupported_version(self, trained):
        split, models = trained
        blob = bytearray(_blob(models["rf"], split))
        blob[4:8] = struct.pack("<I", 99)
        body = bytes(blob[:-A.CHECKSUM_BYTES])
        fixed = body + A._checksum(body)
        with pytest.raises(UnsupportedVersion):
            A.deserialize(fixed)

    def test_bad_magic(self):
        with pytest.raises(ArtifactError):
            A.deserialize(b"NOPE" + b"\x00" * 64)


class TestSelfSufficiency:
    def test_classifies_raw_records_without_training_data(self, tmp_path):
        from edgebot import preprocess

        records = synth.synthetic_records(600, seed=2)
        prep = preprocess.prepare(records, seed=1)
        model = forest.train_forest(prep.split.train,
                                    forest.ForestParams(n_estimators=5), seed=0)
        blob = A.serialize_model(
            model,
            encoding=prep.encoding,
            scaler=prep.scaler,
            feature_names=list(prep.split.train.feature_names),
            feature_kinds=list(prep.split.train.feature_kinds),
            seed=1,
        )
        path = tmp_path / "m.ebot"
        A.save_artifact(path, blob)
        loaded = A.load_artifact(path)
        fresh = synth.synthetic_records(50, seed=99)
        classes, scores = loaded.predict_records(fresh)
        assert classes.shape == (len(fresh),)
        assert np.all((scores >= 0) & (scores <= 1))

    def test_selected_projection_applied(self, trained):
        split, models = trained
        names = list(split.train.feature_names)
        selected = names[:6]
        sub = split.train.select(selected)
        model = forest.train_forest(sub, forest.ForestParams(n_estimators=4), seed=5)
        blob = A.serialize_model(
            model,
            scaler=split.train.scaler,
            feature_names=names,
            feature_kinds=list(split.train.feature_kinds),
            selected=selected,
            seed=5,
        )
        loaded = A.deserialize(blob)
        classes, _ = loaded.predict_full_matrix(split.test.values)
        direct, _ = forest.predict_class(model, split.test.values[:, :6])
        assert np.array_equal(classes, direct)

    def test_describe_dump(self, trained):
        split, models = trained
        loaded = A.deserialize(_blob(models["rf"], split))
        text = A.describe(loaded)
        assert "kind:          rf" in text
        assert "trees:         8" in text

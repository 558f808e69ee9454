"""Randomized hyperparameter search, metrics, noise protocol, benchmarking.

Positive class is Attack throughout. Ratios with zero denominators are
reported as None ("undefined"), never silently coerced to 0 or 1, so
degenerate models stay visible in reports.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass, field, fields as dc_fields
from typing import Optional, Sequence, Union

import numpy as np

from . import boosting, forest
from .boosting import GbdtModel, GbdtParams, TABLE3_LGBM, TABLE3_XGB
from .errors import (
    DataError,
    EmptyMatrix,
    InvalidParams,
    LengthMismatch,
    NoPositiveRows,
)
from .forest import ForestModel, ForestParams
from .preprocess import Dataset

MODEL_KINDS = ("rf", "xgb", "lgbm")

# Fields meaningful per model kind (the hyperparameter table's dashes are
# absent fields, not zeros).
ALLOWED_FIELDS = {
    "rf": {"max_depth", "n_estimators", "min_samples_split", "min_samples_leaf",
           "max_features"},
    "xgb": {"max_depth", "n_estimators", "subsample", "learning_rate",
            "colsample_bytree", "gamma"},
    "lgbm": {"max_depth", "n_estimators", "min_child_samples", "subsample",
             "learning_rate", "num_leaves", "reg_alpha", "reg_lambda",
             "colsample_bytree"},
}


@dataclass
class HyperParams:
    model: str = "rf"
    max_depth: Optional[int] = None
    n_estimators: Optional[int] = None
    min_samples_split: Optional[int] = None
    min_samples_leaf: Optional[int] = None
    max_features: Optional[Union[str, int]] = None
    subsample: Optional[float] = None
    learning_rate: Optional[float] = None
    num_leaves: Optional[int] = None
    reg_alpha: Optional[float] = None
    reg_lambda: Optional[float] = None
    colsample_bytree: Optional[float] = None
    gamma: Optional[float] = None
    min_child_samples: Optional[int] = None

    def set_fields(self) -> dict:
        out = {}
        for f in dc_fields(self):
            if f.name == "model":
                continue
            value = getattr(self, f.name)
            if value is not None:
                out[f.name] = value
        return out

    def validate(self) -> None:
        if self.model not in MODEL_KINDS:
            raise InvalidParams(f"unknown model kind {self.model!r}")
        extra = set(self.set_fields()) - ALLOWED_FIELDS[self.model]
        if extra:
            raise InvalidParams(
                f"fields {sorted(extra)} are not meaningful for {self.model}"
            )

    def to_dict(self) -> dict:
        return {"model": self.model, **self.set_fields()}

    @classmethod
    def from_dict(cls, data: dict) -> "HyperParams":
        hp = cls(**data)
        hp.validate()
        return hp

    def to_forest_params(self) -> ForestParams:
        base = ForestParams()
        for name in ("n_estimators", "max_depth", "min_samples_split",
                     "min_samples_leaf", "max_features"):
            value = getattr(self, name)
            if value is not None:
                setattr(base, name, value)
        return base

    def to_gbdt_params(self) -> GbdtParams:
        from dataclasses import replace

        base = TABLE3_XGB if self.model == "xgb" else TABLE3_LGBM
        updates = {}
        for name in ("n_estimators", "max_depth", "subsample", "learning_rate",
                     "colsample_bytree", "gamma", "reg_alpha", "reg_lambda",
                     "num_leaves", "min_child_samples"):
            value = getattr(self, name)
            if value is not None:
                updates[name] = value
        return replace(base, **updates)


TABLE3 = {
    "rf": HyperParams(model="rf", max_depth=6, n_estimators=100,
                      min_samples_split=10, min_samples_leaf=4, max_features="sqrt"),
    "xgb": HyperParams(model="xgb", max_depth=6, n_estimators=100,
                       subsample=1.0, learning_rate=0.1, colsample_bytree=0.8,
                       gamma=0.1),
    "lgbm": HyperParams(model="lgbm", max_depth=5, n_estimators=200,
                        min_child_samples=20, subsample=0.9, learning_rate=0.01,
                        num_leaves=31, reg_alpha=1.0, reg_lambda=0.0,
                        colsample_bytree=0.9),
}


def train_model(hyper: HyperParams, train: Dataset, seed: int = 0):
    hyper.validate()
    if hyper.model == "rf":
        return forest.train_forest(train, hyper.to_forest_params(), seed=seed)
    params = hyper.to_gbdt_params()
    if hyper.model == "xgb":
        return boosting.train_xgb(train, params, seed=seed)
    return boosting.train_lgbm(train, params, seed=seed)


def predict_classes(model, X) -> np.ndarray:
    if isinstance(model, ForestModel):
        return forest.predict_class(model, X)[0]
    if isinstance(model, GbdtModel):
        return boosting.predict_class(model, X)
    raise InvalidParams(f"cannot predict with {type(model).__name__}")


def predict_scores(model, X) -> np.ndarray:
    """Attack probability (boosting) or attack vote fraction (forest)."""
    if isinstance(model, ForestModel):
        return forest.predict_class(model, X)[1][:, 1]
    if isinstance(model, GbdtModel):
        return boosting.predict_proba(model, X)
    raise InvalidParams(f"cannot predict with {type(model).__name__}")


@dataclass
class ParamSpace:
    """Per-field candidate lists or ranges plus the draw budget and seed.

    Ranges are ("int", lo, hi) inclusive or ("uniform", lo, hi); anything
    else must be a list of candidates.
    """

    model: str
    choices: dict = field(default_factory=dict)
    n_iter: int = 10
    seed: int = 0

    def draw(self, index: int) -> HyperParams:
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(index,)))
        values = {"model": self.model}
        for name in sorted(self.choices):
            spec = self.choices[name]
            if isinstance(spec, (list, tuple)) and len(spec) == 3 and spec[0] in ("int", "uniform"):
                kind, lo, hi = spec
                if kind == "int":
                    values[name] = int(rng.integers(lo, hi + 1))
                else:
                    values[name] = float(rng.uniform(lo, hi))
            else:
                values[name] = spec[int(rng.integers(0, len(spec)))]
        hp = HyperParams(**values)
        hp.validate()
        return hp


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(predictions, labels) -> ConfusionMatrix:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape[0] != labels.shape[0]:
        raise LengthMismatch(
            f"{predictions.shape[0]} predictions vs {labels.shape[0]} labels"
        )
    return ConfusionMatrix(
        tp=int(np.sum((predictions == 1) & (labels == 1))),
        fp=int(np.sum((predictions == 1) & (labels == 0))),
        fn=int(np.sum((predictions == 0) & (labels == 1))),
        tn=int(np.sum((predictions == 0) & (labels == 0))),
    )


def _ratio(num: int, den: int) -> Optional[float]:
    return None if den == 0 else num / den


def metrics(cm: ConfusionMatrix) -> dict:
    """Standard derived rates; zero-denominator ratios come back as None."""
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no counts")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "specificity": _ratio(cm.tn, cm.tn + cm.fp),
        "fnr": _ratio(cm.fn, cm.fn + cm.tp),
        "fpr": _ratio(cm.fp, cm.fp + cm.tn),
    }


def detection_probability(model, test: Dataset) -> float:
    """Fraction of Attack rows classified Attack (test-set recall)."""
    if test.labels is None:
        raise NoPositiveRows("dataset is unlabeled")
    positives = test.labels == 1
    if not positives.any():
        raise NoPositiveRows("no Attack rows in the dataset")
    predictions = predict_classes(model, test.values[positives])
    return float(np.mean(predictions == 1))


@dataclass
class NoiseSpec:
    """Gaussian corruption: per-feature sigma as a fraction of training std."""

    sigma: Union[float, Sequence[float]] = 0.1
    seed: int = 0

    def validate(self) -> None:
        sig = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if np.any(sig < 0):
            raise InvalidParams("noise sigma must be >= 0")

    def to_dict(self) -> dict:
        sigma = self.sigma
        if isinstance(sigma, (list, tuple, np.ndarray)):
            sigma = [float(s) for s in sigma]
        else:
            sigma = float(sigma)
        return {"distribution": "gaussian", "sigma": sigma, "seed": self.seed}


def inject_noise(dataset: Dataset, spec: NoiseSpec) -> Dataset:
    """Add N(0, (sigma*train_std)^2) to numeric columns; bits stay untouched.

    Training std comes from the dataset's scaler provenance: standardized
    data has unit train std per column; unscaled data with an attached
    scaler uses the fitted stds; otherwise the dataset's own column std is
    the documented fallback.
    """
    spec.validate()
    numeric = np.flatnonzero(dataset.numeric_columns())
    sigma = np.broadcast_to(
        np.atleast_1d(np.asarray(spec.sigma, dtype=np.float64)), (numeric.shape[0],)
    )
    values = dataset.values.copy()
    if np.any(sigma > 0):
        if dataset.scaled:
            stds = np.ones(numeric.shape[0])
        elif dataset.scaler is not None:
            pos = {n: i for i, n in enumerate(dataset.scaler.feature_names)}
            stds = np.array([
                dataset.scaler.std[pos[dataset.feature_names[c]]] for c in numeric
            ])
        else:
            stds = dataset.values[:, numeric].std(axis=0)
        rng = np.random.default_rng(spec.seed)
        for k, col in enumerate(numeric):
            if sigma[k] == 0.0:
                continue
            values[:, col] += rng.normal(0.0, sigma[k] * stds[k], size=values.shape[0])
    return Dataset(
        list(dataset.feature_names),
        list(dataset.feature_kinds),
        values,
        dataset.labels,
        scaled=dataset.scaled,
        scaler=dataset.scaler,
        encoding=dataset.encoding,
    )


@dataclass
class EvalReport:
    """Metrics, confusion counts, and resource measurements for one run."""

    model: str
    dataset: str = ""
    confusion: Optional[ConfusionMatrix] = None
    metrics: dict = field(default_factory=dict)
    detection_probability: Optional[float] = None
    training_time_s: Optional[float] = None
    inference_time_s: Optional[float] = None
    model_size_bytes: Optional[int] = None
    noise: Optional[dict] = None
    host: Optional[dict] = None
    hyperparams: Optional[dict] = None
    seed: Optional[int] = None

    def to_dict(self, include_volatile: bool = True) -> dict:
        out = {
            "model": self.model,
            "dataset": self.dataset,
            "confusion": self.confusion.to_dict() if self.confusion else None,
            "metrics": dict(self.metrics),
            "detection_probability": self.detection_probability,
            "model_size_bytes": self.model_size_bytes,
            "noise": self.noise,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
        }
        if include_volatile:
            out["training_time_s"] = self.training_time_s
            out["inference_time_s"] = self.inference_time_s
            out["host"] = self.host
        return out

    def to_json(self, path=None, include_volatile: bool = True):
        payload = self.to_dict(include_volatile=include_volatile)
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if path is None:
            return text
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(value, pct: bool = False) -> str:
    if value is None:
        return "undefined"
    if pct:
        return f"{100.0 * value:.3f}"
    return f"{value:.3f}"


def format_report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned plain-text table mirroring the accuracy/resource summaries."""
    headers = ["model", "accuracy%", "detection%", "precision%", "recall%",
               "f1%", "train_s", "infer_s", "size_MB"]
    rows = [headers]
    for r in reports:
        m = r.metrics
        rows.append([
            r.model,
            _fmt(m.get("accuracy"), pct=True),
            _fmt(r.detection_probability, pct=True),
            _fmt(m.get("precision"), pct=True),
            _fmt(m.get("recall"), pct=True),
            _fmt(m.get("f1"), pct=True),
            _fmt(r.training_time_s),
            _fmt(r.inference_time_s),
            "undefined" if r.model_size_bytes is None
            else f"{r.model_size_bytes / 1e6:.3f}",
        ])
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


def evaluate_model(model, dataset: Dataset, name: str = "",
                   noise: Optional[dict] = None) -> EvalReport:
    if dataset.labels is None:
        raise DataError("evaluation requires labels")
    predictions = predict_classes(model, dataset.values)
    cm = confusion(predictions, dataset.labels)
    kind = model.mode if isinstance(model, GbdtModel) else "rf"
    report = EvalReport(
        model=kind,
        dataset=name,
        confusion=cm,
        metrics=metrics(cm),
        noise=noise,
    )
    if (dataset.labels == 1).any():
        report.detection_probability = float(
            np.mean(predictions[dataset.labels == 1] == 1)
        )
    return report


@dataclass
class Trial:
    index: int
    params: HyperParams
    score: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "params": self.params.to_dict(),
            "score": self.score,
            "error": self.error,
        }


def random_search(
    space: ParamSpace,
    train: Dataset,
    validation: Dataset,
    metric: str = "accuracy",
    train_seed: int = 0,
) -> tuple[HyperParams, list[Trial]]:
    """Sample n_iter configurations, score each on validation, return argmax.

    Ties break toward the earlier draw index; a failing trial is logged and
    skipped, never aborts the search.
    """
    if space.n_iter < 1:
        raise InvalidParams("n_iter must be >= 1")
    trials: list[Trial] = []
    best: Optional[Trial] = None
    for i in range(space.n_iter):
        params = space.draw(i)
        trial = Trial(index=i, params=params)
        try:
            model = train_model(params, train, seed=train_seed)
            predictions = predict_classes(model, validation.values)
            cm = confusion(predictions, validation.labels)
            score = metrics(cm).get(metric)
            if score is None:
                raise DataError(f"metric {metric!r} undefined on validation")
            trial.score = float(score)
        except Exception as exc:  # noqa: BLE001 - trial isolation is the contract
            trial.error = f"{type(exc).__name__}: {exc}"
        trials.append(trial)
        if trial.score is not None and (best is None or trial.score > best.score):
            best = trial
    if best is None:
        raise DataError("every search trial failed")
    return best.params, trials


def host_info() -> dict:
    return {
        "node": platform.node(),
        "machine": platform.machine(),
        "python": platform.python_version(),
    }


def benchmark(
    hyper: HyperParams,
    train: Dataset,
    test: Dataset,
    seed: int = 0,
    repeats: int = 3,
    dataset_name: str = "",
) -> EvalReport:
    """Median-of-repeats wall-clock timings plus serialized size and metrics.

    Timings are machine-specific; reports carry host identity so cross-
    machine comparisons stay ordering-only.
    """
    from .artifact import serialize_model

    train_times = []
    model = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        model = train_model(hyper, train, seed=seed)
        train_times.append(time.perf_counter() - t0)
    infer_times = []
    if test.n_rows:
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            predict_classes(model, test.values)
            infer_times.append(time.perf_counter() - t0)
    else:
        infer_times = [0.0]
    blob = serialize_model(
        model,
        encoding=test.encoding,
        scaler=test.scaler,
        feature_names=list(test.feature_names),
        feature_kinds=list(test.feature_kinds),
        seed=seed,
    )
    if test.n_rows:
        report = evaluate_model(model, test, name=dataset_name)
    else:
        # Empty test split: every ratio is undefined, flagged as None.
        report = EvalReport(
            model=hyper.model, dataset=dataset_name,
            confusion=ConfusionMatrix(),
            metrics={k: None for k in ("accuracy", "precision", "recall", "f1",
                                       "specificity", "fnr", "fpr")},
        )
    report.training_time_s = float(np.median(train_times))
    report.inference_time_s = float(np.median(infer_times))
    report.model_size_bytes = len(blob)
    report.host = host_info()
    report.hyperparams = hyper.to_dict()
    report.seed = seed
    return report

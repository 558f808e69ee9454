"""Feature ranking and filtering: Spearman correlation and model importance.

Correlation output is exploratory/reporting; the pipeline's actual feature
cut comes from nonzero model-importance scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AllZero, ConstantInput, EmptyInput, LengthMismatch, UntrainedModel
from .preprocess import Dataset

IMPORTANCE_MODES = ("gain", "cover", "weight")


def rank(values) -> np.ndarray:
    """Fractional ranks in [1, n]; ties get the group-average rank."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        v = v.ravel()
    n = v.shape[0]
    if n == 0:
        raise EmptyInput("cannot rank an empty vector")
    _, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts
    avg = (starts + ends + 1) / 2.0
    return avg[inverse]


def spearman(x, y) -> float:
    """Rank correlation with population (1/n) moments."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] != y.shape[0]:
        raise LengthMismatch(f"length {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise LengthMismatch("need at least 2 observations")
    rx = rank(x)
    ry = rank(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = np.sqrt(np.mean(dx * dx))
    sy = np.sqrt(np.mean(dy * dy))
    if sx == 0.0:
        raise ConstantInput("first argument is constant; coefficient undefined")
    if sy == 0.0:
        raise ConstantInput("second argument is constant; coefficient undefined")
    r = np.mean(dx * dy) / (sx * sy)
    return float(min(1.0, max(-1.0, r)))


@dataclass
class CorrelationMatrix:
    feature_names: list[str]
    matrix: np.ndarray  # p x p, NaN where a constant column is involved
    constant_features: list[str] = field(default_factory=list)

    def to_long_records(self) -> list[tuple[str, str, Optional[float]]]:
        """(feature_a, feature_b, r) triples, heatmap-ready."""
        out = []
        for i, a in enumerate(self.feature_names):
            for j, b in enumerate(self.feature_names):
                v = self.matrix[i, j]
                out.append((a, b, None if np.isnan(v) else float(v)))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("feature," + ",".join(self.feature_names) + "\n")
            for i, name in enumerate(self.feature_names):
                cells = [
                    "" if np.isnan(v) else repr(float(v)) for v in self.matrix[i]
                ]
                fh.write(name + "," + ",".join(cells) + "\n")

    def to_long_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("feature_a,feature_b,r\n")
            for a, b, v in self.to_long_records():
                fh.write(f"{a},{b},{'' if v is None else repr(v)}\n")

    def to_json(self, path=None):
        payload = {
            "feature_names": self.feature_names,
            "matrix": [
                [None if np.isnan(v) else float(v) for v in row] for row in self.matrix
            ],
            "constant_features": self.constant_features,
        }
        if path is None:
            return payload
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def correlation_matrix(dataset: Dataset, include_label: bool = True) -> CorrelationMatrix:
    """Pairwise Spearman over all feature columns (and the label column).

    Constant columns are flagged and their pairs reported as NaN instead of
    failing the whole matrix; the diagonal is exactly 1 for every column.
    """
    names = list(dataset.feature_names)
    columns = [dataset.values[:, i] for i in range(dataset.n_features)]
    if include_label and dataset.labels is not None:
        names.append("label")
        columns.append(dataset.labels.astype(np.float64))
    p = len(columns)
    if p < 2:
        raise LengthMismatch("need at least 2 columns")
    ranks = np.column_stack([rank(c) for c in columns])
    centered = ranks - ranks.mean(axis=0)
    std = np.sqrt(np.mean(centered * centered, axis=0))
    constant = std == 0.0
    denom = np.where(constant, 1.0, std)
    n = ranks.shape[0]
    cov = centered.T @ centered / n
    matrix = cov / np.outer(denom, denom)
    matrix = (matrix + matrix.T) / 2.0
    matrix = np.clip(matrix, -1.0, 1.0)
    matrix[constant, :] = np.nan
    matrix[:, constant] = np.nan
    np.fill_diagonal(matrix, 1.0)
    return CorrelationMatrix(
        feature_names=names,
        matrix=matrix,
        constant_features=[names[i] for i in np.flatnonzero(constant)],
    )


@dataclass
class ImportanceReport:
    """Per-feature scores under all three modes; `mode` names the active one."""

    feature_names: list[str]
    weight: np.ndarray  # split-use counts (integers)
    gain: np.ndarray
    cover: np.ndarray
    mode: str = "weight"
    model_id: str = ""

    @property
    def scores(self) -> np.ndarray:
        return getattr(self, self.mode)

    def ranked(self) -> list[tuple[str, float]]:
        order = np.argsort(-self.scores, kind="stable")
        return [(self.feature_names[i], float(self.scores[i])) for i in order]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("feature,weight,gain,cover\n")
            for i, name in enumerate(self.feature_names):
                fh.write(
                    f"{name},{int(self.weight[i])},"
                    f"{repr(float(self.gain[i]))},{repr(float(self.cover[i]))}\n"
                )

    def to_json(self, path=None):
        payload = {
            "mode": self.mode,
            "model_id": self.model_id,
            "features": {
                name: {
                    "weight": int(self.weight[i]),
                    "gain": float(self.gain[i]),
                    "cover": float(self.cover[i]),
                }
                for i, name in enumerate(self.feature_names)
            },
        }
        if path is None:
            return payload
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def model_importance(model, mode: str = "weight") -> ImportanceReport:
    """Walk a trained model's trees and total split usage per feature.

    weight counts splits on a feature, gain sums their split-gain values,
    cover sums the hessian mass (or sample count) routed through them.
    """
    if mode not in IMPORTANCE_MODES:
        raise ValueError(f"mode must be one of {IMPORTANCE_MODES}, got {mode!r}")
    trees = getattr(model, "trees", None)
    if not trees:
        raise UntrainedModel("model has no trained trees")
    names = list(getattr(model, "feature_names", []) or [])
    p = max(
        len(names),
        max(int(t.feature.max(initial=-1)) for t in trees) + 1,
    )
    if not names:
        names = [f"f{i}" for i in range(p)]
    weight = np.zeros(p, dtype=np.float64)
    gain = np.zeros(p, dtype=np.float64)
    cover = np.zeros(p, dtype=np.float64)
    for tree in trees:
        internal = tree.feature >= 0
        for f, g, c in zip(tree.feature[internal], tree.gain[internal], tree.cover[internal]):
            weight[f] += 1
            gain[f] += g
            cover[f] += c
    return ImportanceReport(
        feature_names=names,
        weight=weight,
        gain=gain,
        cover=cover,
        mode=mode,
        model_id=getattr(model, "model_id", "") or type(model).__name__,
    )


def select_nonzero(report: ImportanceReport) -> list[str]:
    """Features whose active-mode score is > 0, in original column order."""
    keep = [name for i, name in enumerate(report.feature_names) if report.scores[i] > 0]
    if not keep:
        raise AllZero("no feature has nonzero importance; model is degenerate")
    return keep


def project(dataset: Dataset, features: Sequence[str]) -> Dataset:
    """Dataset projection helper for a selected feature subset."""
    return dataset.select(features)

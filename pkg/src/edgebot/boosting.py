"""Gradient-boosted trees in two modes.

xgb mode: depth-wise second-order boosting with per-tree column
subsampling and gamma-thresholded splits. lgbm mode: leaf-wise best-first
growth over histogram splits with GOSS row selection and exclusive feature
bundling. Both share the tree_core split machinery and the logistic loss.

Leaf weights are stored unshrunk; the learning rate enters every margin as
base_score + lr * sum(tree outputs), so halving weights while doubling the
rate is a bit-exact no-op.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidConfig, InvalidParams, ProbabilityOutOfRange, UntrainedModel
from .preprocess import Dataset
from .tree import (
    OBJECTIVE_GRAD_HESS,
    DecisionTree,
    TreeParams,
    bin_matrix,
    build_bins,
    grow_tree,
)

MODE_XGB = "xgb"
MODE_LGBM = "lgbm"


def sigmoid(margin):
    return 1.0 / (1.0 + np.exp(-np.asarray(margin, dtype=np.float64)))


def logloss_grad_hess(p, y):
    """Cross-entropy gradient and hessian in the margin: g = p - y, h = p(1-p)."""
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ProbabilityOutOfRange("probabilities must lie strictly inside (0, 1)")
    g = p - y
    h = p * (1.0 - p)
    return g, h


def logloss(margins, y) -> float:
    p = sigmoid(margins)
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


@dataclass
class GossConfig:
    """Keep the top-|gradient| fraction a; sample fraction b of the rest."""

    a: float = 0.2
    b: float = 0.1

    def validate(self) -> None:
        if not (0.0 < self.a < 1.0 and 0.0 < self.b < 1.0):
            raise InvalidConfig(f"GOSS fractions must lie in (0,1): a={self.a}, b={self.b}")
        if self.a + self.b > 1.0 + 1e-12:
            raise InvalidConfig(f"GOSS fractions must satisfy a+b <= 1: {self.a}+{self.b}")

    @property
    def amplification(self) -> float:
        return (1.0 - self.a) / self.b


def goss_sample(gradients, config: GossConfig, rng: np.random.Generator):
    """Row selection: top a*n rows by |g| at weight 1, b*n sampled at (1-a)/b.

    Returns (row indices ascending, aligned weights); deterministic for a
    fixed generator state.
    """
    config.validate()
    g = np.asarray(gradients, dtype=np.float64)
    n = g.shape[0]
    top_n = int(round(config.a * n))
    samp_n = int(round(config.b * n))
    order = np.argsort(-np.abs(g), kind="stable")
    top = order[:top_n]
    rest = order[top_n:]
    samp_n = min(samp_n, rest.shape[0])
    sampled = rng.choice(rest, size=samp_n, replace=False) if samp_n else rest[:0]
    idx = np.concatenate([top, sampled])
    weights = np.concatenate([
        np.ones(top.shape[0]),
        np.full(sampled.shape[0], config.amplification),
    ])
    order2 = np.argsort(idx, kind="stable")
    return idx[order2], weights[order2]


@dataclass
class FeatureBundle:
    """Exclusive-feature bundles with offsets that make decoding exact.

    Only non-negative integer-valued columns are bundleable; member j of a
    bundle is shifted by the cumulative maxima of its predecessors, so at
    conflict budget 0 the original (column, value) is recoverable from the
    bundled value alone.
    """

    bundles: list[list[int]] = field(default_factory=list)
    offsets: list[list[float]] = field(default_factory=list)
    maxima: list[list[float]] = field(default_factory=list)
    passthrough: list[int] = field(default_factory=list)
    conflict_budget: int = 0
    n_columns: int = 0

    @property
    def n_output_columns(self) -> int:
        return len(self.bundles) + len(self.passthrough)

    def output_names(self, names: list[str]) -> list[str]:
        out = []
        for members in self.bundles:
            out.append("+".join(names[m] for m in members))
        out.extend(names[i] for i in self.passthrough)
        return out

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        out = np.zeros((X.shape[0], self.n_output_columns), dtype=np.float64)
        for j, members in enumerate(self.bundles):
            acc = out[:, j]
            for m, off in zip(members, self.offsets[j]):
                col = X[:, m]
                nz = col != 0.0
                acc[nz] += col[nz] + off
        for k, m in enumerate(self.passthrough):
            out[:, len(self.bundles) + k] = X[:, m]
        return out

    def decode(self, bundled: np.ndarray) -> np.ndarray:
        bundled = np.asarray(bundled, dtype=np.float64)
        out = np.zeros((bundled.shape[0], self.n_columns), dtype=np.float64)
        for j, members in enumerate(self.bundles):
            v = bundled[:, j]
            for m, off, mx in zip(members, self.offsets[j], self.maxima[j]):
                hit = (v > off) & (v <= off + mx)
                out[hit, m] = v[hit] - off
        for k, m in enumerate(self.passthrough):
            out[:, m] = bundled[:, len(self.bundles) + k]
        return out

    def to_dict(self) -> dict:
        return {
            "bundles": [[int(m) for m in b] for b in self.bundles],
            "offsets": [[float(o) for o in b] for b in self.offsets],
            "maxima": [[float(m) for m in b] for b in self.maxima],
            "passthrough": [int(i) for i in self.passthrough],
            "conflict_budget": self.conflict_budget,
            "n_columns": self.n_columns,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureBundle":
        return cls(
            bundles=[list(b) for b in data["bundles"]],
            offsets=[list(b) for b in data["offsets"]],
            maxima=[list(b) for b in data["maxima"]],
            passthrough=list(data["passthrough"]),
            conflict_budget=int(data["conflict_budget"]),
            n_columns=int(data["n_columns"]),
        )


def _bundleable(col: np.ndarray) -> bool:
    return bool(col.min() >= 0.0 and np.all(col == np.floor(col)))


def efb_bundle(data, conflict_budget: int = 0) -> FeatureBundle:
    """Greedy graph-coloring-style bundling of sparse exclusive columns.

    Candidates (non-negative integer-valued columns, e.g. encoded category
    bits) are visited in decreasing nonzero count and placed into the first
    bundle whose accumulated conflict count stays within budget.
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if conflict_budget < 0:
        raise InvalidConfig("conflict budget must be >= 0")
    p = X.shape[1]
    candidates = [f for f in range(p) if _bundleable(X[:, f])]
    passthrough = [f for f in range(p) if f not in set(candidates)]
    nonzero = {f: int(np.count_nonzero(X[:, f])) for f in candidates}
    # Descending density; ties by column index for determinism.
    ordered = sorted(candidates, key=lambda f: (-nonzero[f], f))
    bundles: list[list[int]] = []
    masks: list[np.ndarray] = []
    used: list[int] = []
    for f in ordered:
        col_nz = X[:, f] != 0.0
        placed = False
        for j in range(len(bundles)):
            conflicts = int(np.count_nonzero(col_nz & masks[j]))
            if used[j] + conflicts <= conflict_budget:
                bundles[j].append(f)
                masks[j] |= col_nz
                used[j] += conflicts
                placed = True
                break
        if not placed:
            bundles.append([f])
            masks.append(col_nz.copy())
            used.append(0)
    offsets: list[list[float]] = []
    maxima: list[list[float]] = []
    for members in bundles:
        offs = []
        maxs = []
        acc = 0.0
        for m in members:
            offs.append(acc)
            mx = float(X[:, m].max())
            maxs.append(mx)
            acc += mx
        offsets.append(offs)
        maxima.append(maxs)
    return FeatureBundle(
        bundles=bundles,
        offsets=offsets,
        maxima=maxima,
        passthrough=passthrough,
        conflict_budget=conflict_budget,
        n_columns=p,
    )


@dataclass
class GbdtParams:
    mode: str = MODE_XGB
    n_estimators: int = 100
    max_depth: int = 6
    learning_rate: float = 0.1
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    reg_lambda: float = 1.0
    reg_alpha: float = 0.0
    gamma: float = 0.0
    num_leaves: Optional[int] = None
    min_child_samples: int = 1
    max_bins: int = 255
    split_search: str = "hist"
    goss: Optional[GossConfig] = None
    efb_conflict_budget: Optional[int] = None  # None disables bundling

    def validate(self) -> None:
        if self.mode not in (MODE_XGB, MODE_LGBM):
            raise InvalidParams(f"mode must be xgb or lgbm, got {self.mode!r}")
        if self.n_estimators < 1:
            raise InvalidParams("n_estimators must be >= 1")
        if self.learning_rate < 0:
            raise InvalidParams("learning_rate must be >= 0")
        if not 0.0 < self.subsample <= 1.0:
            raise InvalidParams("subsample must be in (0, 1]")
        if not 0.0 < self.colsample_bytree <= 1.0:
            raise InvalidParams("colsample_bytree must be in (0, 1]")
        if self.min_child_samples < 1:
            raise InvalidParams("min_child_samples must be >= 1")
        if self.goss is not None:
            self.goss.validate()
        self.tree_params().validate()

    def tree_params(self) -> TreeParams:
        return TreeParams(
            max_depth=self.max_depth,
            min_samples_split=2,
            min_samples_leaf=self.min_child_samples,
            num_leaves=self.num_leaves,
            growth="leaf" if self.mode == MODE_LGBM else "depth",
            objective=OBJECTIVE_GRAD_HESS,
            reg_lambda=self.reg_lambda,
            gamma=self.gamma,
            reg_alpha=self.reg_alpha,
            split_search=self.split_search,
            max_bins=self.max_bins,
        )


# Table-3 configurations. The xgb column lists no reg_lambda; the stock
# library default of 1.0 is used. lgbm gets gamma 0 (its column has none).
TABLE3_XGB = GbdtParams(
    mode=MODE_XGB, n_estimators=100, max_depth=6, learning_rate=0.1,
    subsample=1.0, colsample_bytree=0.8, gamma=0.1, reg_lambda=1.0,
)
TABLE3_LGBM = GbdtParams(
    mode=MODE_LGBM, n_estimators=200, max_depth=5, learning_rate=0.01,
    subsample=0.9, colsample_bytree=0.9, num_leaves=31, min_child_samples=20,
    reg_alpha=1.0, reg_lambda=0.0, gamma=0.0,
    goss=GossConfig(a=0.2, b=0.1), efb_conflict_budget=0,
)


@dataclass
class GbdtModel:
    mode: str
    trees: list[DecisionTree] = field(default_factory=list)
    learning_rate: float = 0.1
    base_score: float = 0.0
    params: Optional[GbdtParams] = None
    feature_names: list[str] = field(default_factory=list)  # model space
    source_feature_names: list[str] = field(default_factory=list)
    bundle: Optional[FeatureBundle] = None
    seed: Optional[int] = None

    @property
    def model_id(self) -> str:
        return f"{self.mode}-s{self.seed}-t{len(self.trees)}"

    def _model_space(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        return self.bundle.transform(X) if self.bundle is not None else X


def _round_rng(seed: int, t: int, purpose: int) -> np.random.Generator:
    # Independent stream per (round, purpose) so enabling one sampler never
    # shifts another's draws.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t, purpose)))


class _Booster:
    """Training context: bundled/binned matrices plus the margin vector."""

    def __init__(self, dataset: Dataset, params: GbdtParams, seed: int):
        params.validate()
        if dataset.labels is None:
            raise InvalidParams("boosting requires a labeled dataset")
        self.params = params
        self.seed = seed
        self.y = dataset.labels.astype(np.float64)
        raw = dataset.values
        self.bundle = None
        if params.efb_conflict_budget is not None:
            self.bundle = efb_bundle(raw, params.efb_conflict_budget)
            self.X = self.bundle.transform(raw)
            self.feature_names = self.bundle.output_names(list(dataset.feature_names))
        else:
            self.X = raw
            self.feature_names = list(dataset.feature_names)
        self.n, self.p = self.X.shape
        rate = min(max(float(self.y.mean()), 1e-6), 1.0 - 1e-6)
        self.base_score = float(math.log(rate / (1.0 - rate)))
        self.margins = np.full(self.n, self.base_score, dtype=np.float64)
        self.tree_params = params.tree_params()
        if params.split_search == "hist":
            self.bins = build_bins(self.X, params.max_bins)
            self.binned = bin_matrix(self.X, self.bins)
        else:
            self.bins = None
            self.binned = None
        self.trees: list[DecisionTree] = []

    def run_round(self, t: int) -> DecisionTree:
        params = self.params
        p_hat = sigmoid(self.margins)
        p_hat = np.clip(p_hat, 1e-15, 1.0 - 1e-15)
        g, h = logloss_grad_hess(p_hat, self.y)
        rows = np.arange(self.n)
        if params.subsample < 1.0:
            rng = _round_rng(self.seed, t, 0)
            k = max(1, int(round(params.subsample * self.n)))
            rows = np.sort(rng.choice(self.n, size=k, replace=False))
        g_eff, h_eff = g, h
        if params.goss is not None:
            rng = _round_rng(self.seed, t, 1)
            sel, w = goss_sample(g[rows], params.goss, rng)
            rows = rows[sel]
            g_eff = np.zeros_like(g)
            h_eff = np.zeros_like(h)
            g_eff[rows] = g[rows] * w
            h_eff[rows] = h[rows] * w
        cols = None
        if params.colsample_bytree < 1.0:
            rng = _round_rng(self.seed, t, 2)
            k = max(1, int(round(params.colsample_bytree * self.p)))
            cols = np.sort(rng.choice(self.p, size=k, replace=False))
        tree = grow_tree(
            self.X,
            g=g_eff,
            h=h_eff,
            params=self.tree_params,
            rows=rows,
            candidate_features=cols,
            bins=self.bins,
            binned=self.binned,
        )
        self.margins += self.params.learning_rate * tree.predict_value(self.X)[:, 0]
        self.trees.append(tree)
        return tree

    def to_model(self, dataset: Dataset) -> GbdtModel:
        return GbdtModel(
            mode=self.params.mode,
            trees=self.trees,
            learning_rate=self.params.learning_rate,
            base_score=self.base_score,
            params=self.params,
            feature_names=self.feature_names,
            source_feature_names=list(dataset.feature_names),
            bundle=self.bundle,
            seed=self.seed,
        )


def train_gbdt(dataset: Dataset, params: GbdtParams, seed: int = 0) -> GbdtModel:
    booster = _Booster(dataset, params, seed)
    for t in range(params.n_estimators):
        booster.run_round(t)
    return booster.to_model(dataset)


def train_xgb(dataset: Dataset, params: Optional[GbdtParams] = None, seed: int = 0) -> GbdtModel:
    """Second-order boosting with the Table-3 xgb configuration by default."""
    params = replace(params or TABLE3_XGB, mode=MODE_XGB)
    return train_gbdt(dataset, params, seed)


def train_lgbm(dataset: Dataset, params: Optional[GbdtParams] = None, seed: int = 0) -> GbdtModel:
    """Leaf-wise histogram boosting with GOSS and EFB, Table-3 defaults."""
    params = replace(params or TABLE3_LGBM, mode=MODE_LGBM)
    return train_gbdt(dataset, params, seed)


def boost_round(model: GbdtModel, dataset: Dataset, margins: np.ndarray):
    """One boosting round against explicit margins; returns (tree, margins).

    The caller owns consistency between `margins` and `model.trees`. This
    standalone path rebuilds histogram state per call; the trainers use a
    persistent context instead.
    """
    if model.params is None:
        raise UntrainedModel("model carries no training parameters")
    booster = _Booster(dataset, model.params, model.seed or 0)
    booster.trees = list(model.trees)
    booster.margins = np.asarray(margins, dtype=np.float64).copy()
    tree = booster.run_round(len(model.trees))
    return tree, booster.margins


def predict_margin(model: GbdtModel, X) -> np.ndarray:
    """base_score + lr * sum of tree outputs, in the original feature space.

    A zero-tree model is legal: the margin is the constant base score.
    """
    Xm = model._model_space(X)
    out = np.full(Xm.shape[0], model.base_score, dtype=np.float64)
    for tree in model.trees:
        out += model.learning_rate * tree.predict_value(Xm)[:, 0]
    return out


def predict_proba(model: GbdtModel, X) -> np.ndarray:
    return sigmoid(predict_margin(model, X))


def predict_class(model: GbdtModel, X, threshold: float = 0.5) -> np.ndarray:
    """Attack (1) when the probability reaches the threshold; 0.5 maps to 1."""
    return (predict_proba(model, X) >= threshold).astype(np.int64)

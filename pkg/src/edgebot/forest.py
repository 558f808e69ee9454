"""Random Forest training and prediction.

Each tree grows on its own bootstrap sample with a fresh uniform subset of
ceil(sqrt(p)) features drawn at every split; prediction is hard majority
voting over per-tree leaf-majority classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvalidParams, PayloadKindMismatch, UntrainedModel
from .preprocess import Dataset
from .tree import (
    OBJECTIVE_GINI,
    PAYLOAD_CLASS_COUNTS,
    PAYLOAD_WEIGHT,
    DecisionTree,
    TreeParams,
    grow_tree,
)


@dataclass
class ForestParams:
    n_estimators: int = 100
    max_depth: int = 6
    min_samples_split: int = 10
    min_samples_leaf: int = 4
    max_features: Union[str, int, None] = "sqrt"

    def validate(self) -> None:
        if self.n_estimators < 1:
            raise InvalidParams(f"n_estimators must be >= 1, got {self.n_estimators}")
        if isinstance(self.max_features, str) and self.max_features != "sqrt":
            raise InvalidParams(f"max_features must be 'sqrt', an int, or None")
        if isinstance(self.max_features, int) and self.max_features < 1:
            raise InvalidParams("max_features must be >= 1 when an int")
        TreeParams(
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
            min_samples_leaf=self.min_samples_leaf,
        ).validate()

    def n_try(self, p: int) -> int:
        if self.max_features is None:
            return p
        if self.max_features == "sqrt":
            return min(p, math.ceil(math.sqrt(p)))
        return min(p, int(self.max_features))


@dataclass
class ForestModel:
    trees: list[DecisionTree] = field(default_factory=list)
    n_classes: int = 2
    params: Optional[ForestParams] = None
    feature_names: list[str] = field(default_factory=list)
    seed: Optional[int] = None

    def _check_trained(self) -> None:
        if not self.trees:
            raise UntrainedModel("forest has no trained trees")


def bootstrap_sample(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """n uniform draws with replacement plus the out-of-bag index set."""
    if n < 1:
        raise InvalidParams("bootstrap needs n >= 1")
    drawn = rng.integers(0, n, size=n)
    oob = np.setdiff1d(np.arange(n), drawn, assume_unique=False)
    return drawn, oob


def _tree_rng(seed: int, k: int) -> np.random.Generator:
    # Counter-derived stream: tree k is reproducible without trees 0..k-1.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def train_forest(dataset: Dataset, params: Optional[ForestParams] = None,
                 seed: int = 0) -> ForestModel:
    if params is None:
        params = ForestParams()
    params.validate()
    if dataset.labels is None:
        raise InvalidParams("train_forest requires a labeled dataset")
    if dataset.n_rows == 0:
        raise InvalidParams("train set is empty")
    X = dataset.values
    y = dataset.labels
    n, p = X.shape
    n_classes = max(2, int(y.max()) + 1)
    m_try = params.n_try(p)
    tree_params = TreeParams(
        max_depth=params.max_depth,
        min_samples_split=params.min_samples_split,
        min_samples_leaf=params.min_samples_leaf,
        objective=OBJECTIVE_GINI,
        n_classes=n_classes,
        split_search="exact",
    )
    trees = []
    for k in range(params.n_estimators):
        rng = _tree_rng(seed, k)
        rows, _ = bootstrap_sample(n, rng)
        sampler = (lambda r=rng: r.choice(p, size=m_try, replace=False))
        trees.append(grow_tree(
            X, y, params=tree_params, rows=rows, feature_sampler=sampler,
        ))
    return ForestModel(
        trees=trees,
        n_classes=n_classes,
        params=params,
        feature_names=list(dataset.feature_names),
        seed=seed,
    )


def _tree_votes(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """(n_rows, n_trees) matrix of per-tree leaf-majority classes."""
    votes = np.empty((X.shape[0], len(model.trees)), dtype=np.int64)
    for j, tree in enumerate(model.trees):
        if tree.payload != PAYLOAD_CLASS_COUNTS:
            raise PayloadKindMismatch("voting requires class-count leaves")
        counts = tree.predict_value(X)
        votes[:, j] = np.argmax(counts, axis=1)  # argmax ties -> lower class
    return votes


def predict_class(model: ForestModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote class and per-class vote fractions.

    Vote ties break toward the lower class index; fractions sum to 1.
    Accepts a single vector or a matrix; output is always batch-shaped.
    """
    model._check_trained()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    votes = _tree_votes(model, X)
    fractions = np.stack(
        [(votes == k).mean(axis=1) for k in range(model.n_classes)], axis=1
    )
    classes = np.argmax(fractions, axis=1)
    return classes, fractions


def predict_mean(model: ForestModel, X) -> np.ndarray:
    """Eq.-style regression aggregation: mean of numeric tree outputs."""
    model._check_trained()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    total = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        if tree.payload != PAYLOAD_WEIGHT:
            raise PayloadKindMismatch("predict_mean requires numeric leaf payloads")
        total += tree.predict_value(X)[:, 0]
    return total / len(model.trees)

"""Shared decision-tree machinery for all three learners.

One array-backed binary tree type serves Gini-grown forest trees and
second-order-boosted trees. Split search runs either exhaustively over
midpoints of sorted distinct values or over quantile-histogram bin
boundaries; the two agree whenever every distinct value gets its own bin.

Conventions fixed here because every consumer depends on them:
values <= threshold go left; thresholds sit at midpoints of adjacent
distinct values; split ties break toward the lower feature index, then the
lower threshold.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    CountMismatch,
    EmptyChild,
    EmptyNode,
    FeatureIndexOutOfRange,
    InvalidParams,
)

PAYLOAD_CLASS_COUNTS = "class_counts"
PAYLOAD_WEIGHT = "weight"

OBJECTIVE_GINI = "gini"
OBJECTIVE_GRAD_HESS = "grad_hess"

MAX_BINS = 255


@dataclass
class TreeParams:
    max_depth: int = 6
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    num_leaves: Optional[int] = None  # leaf-wise growth cap
    growth: str = "depth"  # depth | leaf
    objective: str = OBJECTIVE_GINI
    n_classes: int = 2
    reg_lambda: float = 0.0
    gamma: float = 0.0
    reg_alpha: float = 0.0
    split_search: str = "exact"  # exact | hist
    max_bins: int = MAX_BINS

    def validate(self) -> None:
        if self.max_depth < 0:
            raise InvalidParams(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise InvalidParams(
                f"min_samples_split must be >= 2, got {self.min_samples_split}"
            )
        if self.min_samples_leaf < 1:
            raise InvalidParams(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}"
            )
        if self.num_leaves is not None and self.num_leaves < 1:
            raise InvalidParams(f"num_leaves must be >= 1, got {self.num_leaves}")
        if self.growth not in ("depth", "leaf"):
            raise InvalidParams(f"growth must be depth or leaf, got {self.growth!r}")
        if self.objective not in (OBJECTIVE_GINI, OBJECTIVE_GRAD_HESS):
            raise InvalidParams(f"unknown objective {self.objective!r}")
        if self.split_search not in ("exact", "hist"):
            raise InvalidParams(f"split_search must be exact or hist")
        if self.n_classes < 2:
            raise InvalidParams("n_classes must be >= 2")
        if self.reg_lambda < 0 or self.gamma < 0 or self.reg_alpha < 0:
            raise InvalidParams("regularization parameters must be >= 0")
        if not 2 <= self.max_bins <= 255:
            raise InvalidParams("max_bins must be in [2, 255]")


@dataclass
class SplitCandidate:
    feature: int
    threshold: float
    gain: float
    left_stats: np.ndarray  # class counts, or [G, H, n]
    right_stats: np.ndarray


class DecisionTree:
    """Immutable array-backed binary tree. feature == -1 marks a leaf."""

    def __init__(self, feature, threshold, left, right, gain, cover,
                 n_samples, value, payload: str, meta: Optional[dict] = None):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.gain = np.asarray(gain, dtype=np.float64)
        self.cover = np.asarray(cover, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)
        if self.value.ndim == 1:
            self.value = self.value[:, None]
        self.payload = payload
        self.meta = meta or {}

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int32)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max(initial=0))

    def max_feature_index(self) -> int:
        internal = self.feature >= 0
        if not internal.any():
            return -1
        return int(self.feature[internal].max())

    def leaf_indices(self, X: np.ndarray) -> np.ndarray:
        """Batch root-to-leaf assignment by recursive row partitioning.

        Each node's row subset is split once with a single vectorized
        comparison, so total work is O(rows x depth) regardless of batch
        size; empty subtrees are never visited.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if self.max_feature_index() >= X.shape[1]:
            raise FeatureIndexOutOfRange(
                f"tree uses feature {self.max_feature_index()}, "
                f"input has {X.shape[1]} columns"
            )
        out = np.zeros(X.shape[0], dtype=np.int64)
        if X.shape[0] == 0 or self.feature[0] < 0:
            return out
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            f = int(self.feature[node])
            if f < 0:
                out[rows] = node
                continue
            go_left = X[rows, f] <= self.threshold[node]
            left_rows = rows[go_left]
            right_rows = rows[~go_left]
            if left_rows.size:
                stack.append((int(self.left[node]), left_rows))
            if right_rows.size:
                stack.append((int(self.right[node]), right_rows))
        return out

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        """Leaf payloads for a batch; shape (n, payload_width)."""
        return self.value[self.leaf_indices(X)]


def traverse(tree: DecisionTree, x) -> np.ndarray:
    """Root-to-leaf walk for a single feature vector; returns leaf payload."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if tree.max_feature_index() >= x.shape[0]:
        raise FeatureIndexOutOfRange(
            f"tree uses feature {tree.max_feature_index()}, vector has {x.shape[0]}"
        )
    node = 0
    while tree.feature[node] >= 0:
        if x[tree.feature[node]] <= tree.threshold[node]:
            node = int(tree.left[node])
        else:
            node = int(tree.right[node])
    return tree.value[node]


def gini(class_counts) -> float:
    """Node impurity 1 - sum(p_k^2)."""
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EmptyNode("gini of an empty node is undefined")
    p = counts / total
    return float(1.0 - np.dot(p, p))


def gini_gain(parent, left, right) -> float:
    """Impurity decrease of a split; children must partition the parent."""
    parent = np.asarray(parent, dtype=np.float64)
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if not np.array_equal(left + right, parent):
        raise CountMismatch("left + right class counts must equal parent")
    n = parent.sum()
    nl = left.sum()
    nr = right.sum()
    if nl <= 0 or nr <= 0:
        raise EmptyChild("both children must be non-empty")
    return gini(parent) - (nl / n) * gini(left) - (nr / n) * gini(right)


def _soft_threshold(G: np.ndarray, alpha: float):
    if alpha == 0.0:
        return G
    return np.sign(G) * np.maximum(np.abs(G) - alpha, 0.0)


def _leaf_score(G, H, params: TreeParams):
    Gs = _soft_threshold(np.asarray(G, dtype=np.float64), params.reg_alpha)
    return Gs * Gs / (np.asarray(H, dtype=np.float64) + params.reg_lambda)


def _leaf_weight(G: float, H: float, params: TreeParams) -> float:
    Gs = _soft_threshold(np.float64(G), params.reg_alpha)
    return float(-Gs / (H + params.reg_lambda))


def best_split_exhaustive(
    X: np.ndarray,
    y: Optional[np.ndarray] = None,
    *,
    g: Optional[np.ndarray] = None,
    h: Optional[np.ndarray] = None,
    rows: Optional[np.ndarray] = None,
    features: Optional[Sequence[int]] = None,
    params: TreeParams,
) -> Optional[SplitCandidate]:
    """Scan midpoints between consecutive distinct sorted values per feature.

    Returns the maximal-gain candidate, or None when nothing clears the
    objective's bar (gain > 0 after the gamma charge for grad-hess).
    """
    X = np.asarray(X, dtype=np.float64)
    if rows is None:
        rows = np.arange(X.shape[0])
    if features is None:
        features = np.arange(X.shape[1])
    features = np.sort(np.asarray(features, dtype=np.int64))
    n = rows.shape[0]
    min_leaf = params.min_samples_leaf

    best: Optional[SplitCandidate] = None

    if params.objective == OBJECTIVE_GINI:
        ysub = y[rows]
        K = params.n_classes
        parent_counts = np.bincount(ysub, minlength=K).astype(np.float64)
        gini_parent = gini(parent_counts)
        if gini_parent == 0.0:
            return None
        for f in features:
            col = X[rows, f]
            order = np.argsort(col, kind="stable")
            sv = col[order]
            onehot = np.zeros((n, K), dtype=np.float64)
            onehot[np.arange(n), ysub[order]] = 1.0
            cum = np.cumsum(onehot, axis=0)
            pos = np.flatnonzero(sv[:-1] < sv[1:])
            if pos.size == 0:
                continue
            nl = (pos + 1).astype(np.float64)
            nr = n - nl
            ok = (nl >= min_leaf) & (nr >= min_leaf)
            pos = pos[ok]
            if pos.size == 0:
                continue
            nl = nl[ok]
            nr = nr[ok]
            cl = cum[pos]
            cr = parent_counts[None, :] - cl
            gl = 1.0 - ((cl / nl[:, None]) ** 2).sum(axis=1)
            gr = 1.0 - ((cr / nr[:, None]) ** 2).sum(axis=1)
            gains = gini_parent - (nl / n) * gl - (nr / n) * gr
            i = int(np.argmax(gains))
            if gains[i] > 0.0 and (best is None or gains[i] > best.gain):
                thr = (sv[pos[i]] + sv[pos[i] + 1]) / 2.0
                best = SplitCandidate(int(f), float(thr), float(gains[i]),
                                      cl[i].copy(), cr[i].copy())
        return best

    gsub = g[rows]
    hsub = h[rows]
    G = gsub.sum()
    H = hsub.sum()
    score_parent = float(_leaf_score(G, H, params))
    for f in features:
        col = X[rows, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        cg = np.cumsum(gsub[order])
        ch = np.cumsum(hsub[order])
        pos = np.flatnonzero(sv[:-1] < sv[1:])
        if pos.size == 0:
            continue
        nl = pos + 1
        nr = n - nl
        ok = (nl >= min_leaf) & (nr >= min_leaf)
        pos = pos[ok]
        if pos.size == 0:
            continue
        GL = cg[pos]
        HL = ch[pos]
        GR = G - GL
        HR = H - HL
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = 0.5 * (_leaf_score(GL, HL, params) + _leaf_score(GR, HR, params)
                           - score_parent) - params.gamma
        i = int(np.argmax(gains))
        if gains[i] > 0.0 and (best is None or gains[i] > best.gain):
            thr = (sv[pos[i]] + sv[pos[i] + 1]) / 2.0
            nl_i = float(pos[i] + 1)
            best = SplitCandidate(
                int(f), float(thr), float(gains[i]),
                np.array([GL[i], HL[i], nl_i]),
                np.array([GR[i], HR[i], n - nl_i]),
            )
    return best


@dataclass
class BinSpec:
    """Per-feature cut points from training-set quantiles (<= 255 bins).

    Cuts sit at midpoints between adjacent distinct values, so a histogram
    boundary is exactly the threshold an exhaustive search would pick.
    """

    cuts: list[np.ndarray]

    def n_bins(self, f: int) -> int:
        return self.cuts[f].shape[0] + 1

    @property
    def max_bins_used(self) -> int:
        return max((c.shape[0] + 1 for c in self.cuts), default=1)


def build_bins(X: np.ndarray, max_bins: int = MAX_BINS) -> BinSpec:
    X = np.asarray(X, dtype=np.float64)
    cuts = []
    for f in range(X.shape[1]):
        u = np.unique(X[:, f])
        if u.shape[0] <= max_bins:
            c = (u[:-1] + u[1:]) / 2.0
        else:
            qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
            qv = np.quantile(X[:, f], qs, method="lower")
            pos = np.searchsorted(u, qv)
            upper = np.minimum(pos + 1, u.shape[0] - 1)
            c = np.unique((u[pos] + u[upper]) / 2.0)
        cuts.append(np.ascontiguousarray(c))
    return BinSpec(cuts=cuts)


def bin_matrix(X: np.ndarray, bins: BinSpec) -> np.ndarray:
    """uint8 bin index per cell; bin b covers (cut[b-1], cut[b]]."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape, dtype=np.uint8)
    for f in range(X.shape[1]):
        out[:, f] = np.searchsorted(bins.cuts[f], X[:, f], side="left")
    return out


@dataclass
class NodeHistogram:
    """Per-feature aggregates over a node's rows (grad-hess objective)."""

    features: np.ndarray  # candidate column ids, ascending
    counts: np.ndarray  # (n_features, width)
    grad: np.ndarray
    hess: np.ndarray

    def subtract(self, other: "NodeHistogram") -> "NodeHistogram":
        """Sibling histogram: self acting as parent minus one child."""
        return NodeHistogram(
            features=self.features,
            counts=self.counts - other.counts,
            grad=self.grad - other.grad,
            hess=self.hess - other.hess,
        )


def build_histogram(
    binned: np.ndarray,
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    features: np.ndarray,
    bins: BinSpec,
) -> NodeHistogram:
    width = max(bins.n_bins(int(f)) for f in features)
    counts = np.zeros((features.shape[0], width), dtype=np.float64)
    grad = np.zeros_like(counts)
    hess = np.zeros_like(counts)
    gs = g[rows]
    hs = h[rows]
    for i, f in enumerate(features):
        b = binned[rows, f]
        nb = bins.n_bins(int(f))
        counts[i, :nb] = np.bincount(b, minlength=nb)[:nb]
        grad[i, :nb] = np.bincount(b, weights=gs, minlength=nb)[:nb]
        hess[i, :nb] = np.bincount(b, weights=hs, minlength=nb)[:nb]
    return NodeHistogram(features=features, counts=counts, grad=grad, hess=hess)


def best_split_histogram(
    hist: NodeHistogram,
    bins: BinSpec,
    params: TreeParams,
) -> Optional[SplitCandidate]:
    """Evaluate splits at bin boundaries only; same tie rule as exhaustive."""
    best: Optional[SplitCandidate] = None
    for i, f in enumerate(hist.features):
        f = int(f)
        nb = bins.n_bins(f)
        if nb < 2:
            continue
        cnt = hist.counts[i, :nb]
        CL = np.cumsum(cnt)[:-1]
        n = cnt.sum()
        G = hist.grad[i, :nb].sum()
        H = hist.hess[i, :nb].sum()
        GL = np.cumsum(hist.grad[i, :nb])[:-1]
        HL = np.cumsum(hist.hess[i, :nb])[:-1]
        nr = n - CL
        ok = (CL >= params.min_samples_leaf) & (nr >= params.min_samples_leaf)
        if not ok.any():
            continue
        GR = G - GL
        HR = H - HL
        # Leading/trailing empty bins give H sums of 0; they are masked out
        # by the count constraint but still flow through the vector math.
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = np.where(
                ok,
                0.5 * (_leaf_score(GL, HL, params) + _leaf_score(GR, HR, params)
                       - float(_leaf_score(G, H, params))) - params.gamma,
                -np.inf,
            )
        j = int(np.argmax(gains))
        if gains[j] > 0.0 and (best is None or gains[j] > best.gain):
            best = SplitCandidate(
                f, float(bins.cuts[f][j]), float(gains[j]),
                np.array([GL[j], HL[j], CL[j]]),
                np.array([GR[j], HR[j], nr[j]]),
            )
    return best


class _Builder:
    def __init__(self, payload_width: int):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.gain: list[float] = []
        self.cover: list[float] = []
        self.n_samples: list[int] = []
        self.value: list[np.ndarray] = []
        self.payload_width = payload_width
        self.candidate_log: list[int] = []

    def add(self, value: np.ndarray, cover: float, n: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.gain.append(0.0)
        self.cover.append(cover)
        self.n_samples.append(n)
        self.value.append(np.asarray(value, dtype=np.float64))
        return len(self.feature) - 1

    def make_internal(self, node: int, feature: int, threshold: float,
                      gain: float, left: int, right: int) -> None:
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.gain[node] = gain
        self.left[node] = left
        self.right[node] = right

    def finish(self, payload: str, meta: Optional[dict] = None) -> DecisionTree:
        return DecisionTree(
            self.feature, self.threshold, self.left, self.right,
            self.gain, self.cover, np.asarray(self.n_samples),
            np.vstack(self.value) if self.value else np.zeros((0, self.payload_width)),
            payload,
            meta={**(meta or {}), "candidate_counts": self.candidate_log},
        )


def grow_tree(
    X: np.ndarray,
    y: Optional[np.ndarray] = None,
    *,
    g: Optional[np.ndarray] = None,
    h: Optional[np.ndarray] = None,
    params: TreeParams,
    rows: Optional[np.ndarray] = None,
    candidate_features: Optional[np.ndarray] = None,
    feature_sampler: Optional[Callable[[], np.ndarray]] = None,
    bins: Optional[BinSpec] = None,
    binned: Optional[np.ndarray] = None,
) -> DecisionTree:
    """Grow one tree under the configured objective and growth policy.

    Depth-wise growth serves forest and xgb modes; leaf-wise best-first
    growth capped by num_leaves serves lgbm mode. Histogram search requires
    a fixed candidate feature set (per-tree column sampling); per-split
    sampling via feature_sampler is an exhaustive-search feature.
    """
    params.validate()
    X = np.asarray(X, dtype=np.float64)
    if rows is None:
        rows = np.arange(X.shape[0])
    rows = np.asarray(rows)
    if rows.shape[0] == 0:
        raise InvalidParams("cannot grow a tree from zero rows")
    if params.objective == OBJECTIVE_GINI:
        if y is None:
            raise InvalidParams("gini objective requires labels")
        y = np.asarray(y, dtype=np.int64)
    else:
        if g is None or h is None:
            raise InvalidParams("grad_hess objective requires g and h")
        g = np.asarray(g, dtype=np.float64)
        h = np.asarray(h, dtype=np.float64)
    if candidate_features is None:
        candidate_features = np.arange(X.shape[1], dtype=np.int64)
    else:
        candidate_features = np.sort(np.asarray(candidate_features, dtype=np.int64))

    use_hist = params.split_search == "hist"
    if use_hist:
        if feature_sampler is not None:
            raise InvalidParams("per-split feature sampling needs exact search")
        if bins is None:
            bins = build_bins(X[rows], params.max_bins)
        if binned is None:
            binned = bin_matrix(X, bins)

    payload_width = params.n_classes if params.objective == OBJECTIVE_GINI else 1
    builder = _Builder(payload_width)

    def node_value(node_rows: np.ndarray) -> tuple[np.ndarray, float]:
        if params.objective == OBJECTIVE_GINI:
            counts = np.bincount(y[node_rows], minlength=params.n_classes)
            return counts.astype(np.float64), float(node_rows.shape[0])
        Gn = float(g[node_rows].sum())
        Hn = float(h[node_rows].sum())
        return np.array([_leaf_weight(Gn, Hn, params)]), Hn

    def find_split(node_rows: np.ndarray, hist: Optional[NodeHistogram]):
        feats = candidate_features
        if feature_sampler is not None:
            feats = np.sort(np.asarray(feature_sampler(), dtype=np.int64))
        builder.candidate_log.append(int(feats.shape[0]))
        if use_hist:
            return best_split_histogram(hist, bins, params)
        return best_split_exhaustive(
            X, y, g=g, h=h, rows=node_rows, features=feats, params=params
        )

    def partition(node_rows: np.ndarray, cand: SplitCandidate):
        go_left = X[node_rows, cand.feature] <= cand.threshold
        return node_rows[go_left], node_rows[~go_left]

    if params.growth == "depth":
        def recurse(node_rows: np.ndarray, depth: int,
                    hist: Optional[NodeHistogram]) -> int:
            value, cover = node_value(node_rows)
            node = builder.add(value, cover, node_rows.shape[0])
            if depth >= params.max_depth or node_rows.shape[0] < params.min_samples_split:
                return node
            if use_hist and hist is None:
                hist = build_histogram(binned, node_rows, g, h, candidate_features, bins)
            cand = find_split(node_rows, hist)
            if cand is None:
                return node
            left_rows, right_rows = partition(node_rows, cand)
            left_hist = right_hist = None
            if use_hist:
                if left_rows.shape[0] <= right_rows.shape[0]:
                    left_hist = build_histogram(binned, left_rows, g, h,
                                                candidate_features, bins)
                    right_hist = hist.subtract(left_hist)
                else:
                    right_hist = build_histogram(binned, right_rows, g, h,
                                                 candidate_features, bins)
                    left_hist = hist.subtract(right_hist)
            left_id = recurse(left_rows, depth + 1, left_hist)
            right_id = recurse(right_rows, depth + 1, right_hist)
            builder.make_internal(node, cand.feature, cand.threshold,
                                  cand.gain, left_id, right_id)
            return node

        recurse(rows, 0, None)
        return builder.finish(
            PAYLOAD_CLASS_COUNTS if params.objective == OBJECTIVE_GINI else PAYLOAD_WEIGHT
        )

    # Leaf-wise best-first growth (lgbm mode).
    num_leaves = params.num_leaves if params.num_leaves is not None else np.inf

    def leaf_entry(node_rows: np.ndarray, depth: int, node_id: int,
                   hist: Optional[NodeHistogram]):
        if depth >= params.max_depth or node_rows.shape[0] < params.min_samples_split:
            return None
        nonlocal_hist = hist
        if use_hist and nonlocal_hist is None:
            nonlocal_hist = build_histogram(binned, node_rows, g, h,
                                            candidate_features, bins)
        cand = find_split(node_rows, nonlocal_hist)
        if cand is None:
            return None
        return (node_rows, depth, node_id, nonlocal_hist, cand)

    value, cover = node_value(rows)
    root = builder.add(value, cover, rows.shape[0])
    heap: list[tuple[float, int, tuple]] = []
    counter = 0
    entry = leaf_entry(rows, 0, root, None)
    if entry is not None:
        heapq.heappush(heap, (-entry[4].gain, counter, entry))
        counter += 1
    n_leaves = 1
    while heap and n_leaves < num_leaves:
        _, _, (node_rows, depth, node_id, hist, cand) = heapq.heappop(heap)
        left_rows, right_rows = partition(node_rows, cand)
        left_hist = right_hist = None
        if use_hist:
            if left_rows.shape[0] <= right_rows.shape[0]:
                left_hist = build_histogram(binned, left_rows, g, h,
                                            candidate_features, bins)
                right_hist = hist.subtract(left_hist)
            else:
                right_hist = build_histogram(binned, right_rows, g, h,
                                             candidate_features, bins)
                left_hist = hist.subtract(right_hist)
        lv, lc = node_value(left_rows)
        left_id = builder.add(lv, lc, left_rows.shape[0])
        rv, rc = node_value(right_rows)
        right_id = builder.add(rv, rc, right_rows.shape[0])
        builder.make_internal(node_id, cand.feature, cand.threshold,
                              cand.gain, left_id, right_id)
        n_leaves += 1
        for child_rows, child_id, child_hist in (
            (left_rows, left_id, left_hist),
            (right_rows, right_id, right_hist),
        ):
            child = leaf_entry(child_rows, depth + 1, child_id, child_hist)
            if child is not None:
                heapq.heappush(heap, (-child[4].gain, counter, child))
                counter += 1
    return builder.finish(
        PAYLOAD_CLASS_COUNTS if params.objective == OBJECTIVE_GINI else PAYLOAD_WEIGHT
    )

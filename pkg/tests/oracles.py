"""Independent reference implementations used to check the real code.

Everything here is deliberately naive (sort-and-group ranking, explicit
enumeration of split points, recursive descent) and shares no code with
the implementations under test.
"""

from __future__ import annotations

import numpy as np


def rank_oracle(values) -> np.ndarray:
    """Sort-and-group average ranking."""
    v = list(map(float, values))
    order = sorted(range(len(v)), key=lambda i: v[i])
    ranks = [0.0] * len(v)
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and v[order[j]] == v[order[i]]:
            j += 1
        avg = (i + 1 + j) / 2.0  # mean of 1-based positions i+1 .. j
        for k in range(i, j):
            ranks[order[k]] = avg
        i = j
    return np.array(ranks)


def pearson_oracle(x, y) -> float:
    """Population-moment Pearson, written out longhand."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mx = sum(x) / len(x)
    my = sum(y) / len(y)
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y)) / len(x)
    sx = (sum((a - mx) ** 2 for a in x) / len(x)) ** 0.5
    sy = (sum((b - my) ** 2 for b in y) / len(y)) ** 0.5
    return cov / (sx * sy)


def spearman_oracle(x, y) -> float:
    return pearson_oracle(rank_oracle(x), rank_oracle(y))


def gini_oracle(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    p = counts / total
    return float(1.0 - np.dot(p, p))


def enumerate_best_split_gini(X, y, n_classes=2, min_leaf=1):
    """Try every feature and every midpoint; keep first strict maximum."""
    n, p = X.shape
    best = None  # (gain, feature, threshold, left_counts, right_counts)
    for f in range(p):
        values = np.unique(X[:, f])
        for a, b in zip(values[:-1], values[1:]):
            thr = (a + b) / 2.0
            left = X[:, f] <= thr
            nl = int(left.sum())
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            cl = np.bincount(y[left], minlength=n_classes).astype(float)
            cr = np.bincount(y[~left], minlength=n_classes).astype(float)
            parent = cl + cr
            gain = (gini_oracle(parent)
                    - (nl / n) * gini_oracle(cl)
                    - (nr / n) * gini_oracle(cr))
            if gain > 0 and (best is None or gain > best[0]):
                best = (gain, f, thr, cl, cr)
    return best


def enumerate_best_split_gradhess(X, g, h, reg_lambda=0.0, gamma=0.0,
                                  reg_alpha=0.0, min_leaf=1):
    n, p = X.shape

    def score(G, H):
        Gs = np.sign(G) * max(abs(G) - reg_alpha, 0.0)
        return Gs * Gs / (H + reg_lambda)

    total = score(g.sum(), h.sum())
    best = None
    for f in range(p):
        values = np.unique(X[:, f])
        for a, b in zip(values[:-1], values[1:]):
            thr = (a + b) / 2.0
            left = X[:, f] <= thr
            nl = int(left.sum())
            if nl < min_leaf or (n - nl) < min_leaf:
                continue
            gain = 0.5 * (score(g[left].sum(), h[left].sum())
                          + score(g[~left].sum(), h[~left].sum())
                          - total) - gamma
            if gain > 0 and (best is None or gain > best[0]):
                best = (gain, f, thr)
    return best


def traverse_oracle(tree, x) -> np.ndarray:
    """Recursive descent using only the tree's public arrays."""

    def walk(node: int):
        if tree.feature[node] < 0:
            return tree.value[node]
        if x[tree.feature[node]] <= tree.threshold[node]:
            return walk(int(tree.left[node]))
        return walk(int(tree.right[node]))

    return walk(0)


def logistic_loss_oracle(margin: float, y: int) -> float:
    import math

    p = 1.0 / (1.0 + math.exp(-margin))
    p = min(max(p, 1e-300), 1.0 - 1e-16)
    return -y * math.log(p) - (1 - y) * math.log(1.0 - p)

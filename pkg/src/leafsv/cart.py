"""Minimal CART regression fitter used to build test fixtures.

Greedy variance-reduction splits at midpoints of consecutive sorted unique
values, deterministic given the seed.  Per-node sample counts are recorded
because the path-dependent estimator consumes them.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .exceptions import ConfigError
from .trees import Tree, TreeEnsemble, TreeNode

__all__ = ["fit_cart", "fit_forest"]


def _best_split(X: np.ndarray, y: np.ndarray):
    """(feature, threshold) minimizing summed child SSE; None if no split helps.

    Ties break on the lowest feature index, then the lowest threshold.
    """
    n, p = X.shape
    best = None
    best_score = float(np.sum((y - y.mean()) ** 2))
    eps = 1e-12 * max(1.0, abs(best_score))
    for j in range(p):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        cum = np.cumsum(ys)
        cum2 = np.cumsum(ys * ys)
        total, total2 = cum[-1], cum2[-1]
        # candidate cut after position k (1-based prefix length)
        distinct = np.flatnonzero(xs[1:] > xs[:-1]) + 1
        for k in distinct:
            left_sse = cum2[k - 1] - cum[k - 1] ** 2 / k
            right_n = n - k
            right_sum = total - cum[k - 1]
            right_sse = (total2 - cum2[k - 1]) - right_sum**2 / right_n
            score = left_sse + right_sse
            if score < best_score - eps:
                best_score = score
                best = (j, float((xs[k - 1] + xs[k]) / 2.0))
    return best


def fit_cart(
    data,
    labels,
    max_depth: int,
    min_samples_leaf: int = 1,
    seed: int | None = None,
) -> TreeEnsemble:
    """Fit a single regression tree; returns a one-tree ensemble."""
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ConfigError("row count of data and labels differ")
    if X.shape[0] < 2 * min_samples_leaf:
        raise ConfigError("too few rows for the requested min_samples_leaf")
    nodes: dict[int, TreeNode] = {}
    counter = iter(range(1 << 30))

    def grow(idx: np.ndarray, depth: int) -> int:
        nid = next(counter)
        Xi, yi = X[idx], y[idx]
        split = None
        if depth < max_depth and len(idx) >= 2 * min_samples_leaf:
            split = _best_split(Xi, yi)
        if split is not None:
            j, t = split
            left_idx = idx[Xi[:, j] <= t]
            right_idx = idx[Xi[:, j] > t]
            if min(len(left_idx), len(right_idx)) < min_samples_leaf:
                split = None
        if split is None:
            nodes[nid] = TreeNode(nid, None, None, None, None, float(yi.mean()), len(idx))
            return nid
        left = grow(left_idx, depth + 1)
        right = grow(right_idx, depth + 1)
        nodes[nid] = TreeNode(nid, j, t, left, right, None, len(idx))
        return nid

    grow(np.arange(X.shape[0]), 0)
    return TreeEnsemble((Tree(nodes, X.shape[1]),), X.shape[1], "sum")


def fit_forest(
    data,
    labels,
    n_trees: int,
    max_depth: int,
    min_samples_leaf: int = 1,
    seed: int = 0,
) -> TreeEnsemble:
    """Bagged forest of CART trees with 'average' aggregation."""
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    y = np.asarray(labels, dtype=float)
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        idx = rng.integers(0, X.shape[0], size=X.shape[0])
        single = fit_cart(X[idx], y[idx], max_depth, min_samples_leaf)
        trees.append(single.trees[0])
    return TreeEnsemble(tuple(trees), X.shape[1], "average")

"""Flattened-array batch prediction for tree ensembles.

Trees are compiled to parallel arrays once per ensemble and traversed with a
numba kernel; the Monte-Carlo oracles evaluate ensembles on millions of
points and a pure-Python walk is far too slow for that.
"""

from __future__ import annotations

from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np
from numba import njit


@dataclass(frozen=True)
class FlatTrees:
    # node arrays of all trees concatenated; roots[t] is the index of tree t's root
    feature: np.ndarray  # int32, -1 for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32, absolute index
    right: np.ndarray  # int32, absolute index
    value: np.ndarray  # float64, leaf value (0 for internal)
    roots: np.ndarray  # int32, (n_trees,)
    scale: float


def flatten(ensemble) -> FlatTrees:
    feature, threshold, left, right, value, roots = [], [], [], [], [], []
    offset = 0
    for tree in ensemble.trees:
        ids = sorted(tree.nodes)
        pos = {nid: offset + i for i, nid in enumerate(ids)}
        roots.append(pos[0])
        for nid in ids:
            n = tree.nodes[nid]
            if n.is_leaf:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(n.value)
            else:
                feature.append(n.feature)
                threshold.append(n.threshold)
                left.append(pos[n.left])
                right.append(pos[n.right])
                value.append(0.0)
        offset += len(ids)
    return FlatTrees(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(value, dtype=np.float64),
        np.asarray(roots, dtype=np.int32),
        ensemble.agg_scale,
    )


@njit(cache=True)
def _predict_kernel(X, feature, threshold, left, right, value, roots, scale):
    n = X.shape[0]
    out = np.zeros(n)
    for t in range(roots.shape[0]):
        root = roots[t]
        for i in range(n):
            node = root
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] += value[node]
    return out * scale


_flat_cache: WeakKeyDictionary = WeakKeyDictionary()


def ensemble_predict(ensemble, X: np.ndarray) -> np.ndarray:
    flat = _flat_cache.get(ensemble)
    if flat is None:
        flat = flatten(ensemble)
        _flat_cache[ensemble] = flat
    return _predict_kernel(
        X, flat.feature, flat.threshold, flat.left, flat.right,
        flat.value, flat.roots, flat.scale,
    )

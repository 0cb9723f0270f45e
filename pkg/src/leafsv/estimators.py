"""Reduced predictors: the three ways to estimate E[f(x_S, X_~S) | X_S = x_S].

* ``shap_reduced`` walks each tree once, weighting unconditioned branches by
  training-count ratios (the path-dependent factorization).
* ``discrete_reduced`` is the plug-in conditional expectation over exact
  matches of the conditioned values; it needs discrete columns.
* ``leaf_reduced`` weights each compatible leaf by the ratio of its training
  mass to the mass of its projection onto the conditioned columns, with a
  normalizing constant so the weights form a distribution.

The cooperative-game value function used by the Shapley engine is exposed as
``game_value`` on the result: for the leaf estimator this is the
*unnormalized* weighted sum, which is the quantity whose per-leaf
decomposition the fast multi-game algorithm computes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .data import Between, Dataset, EqualTo, count_region
from .exceptions import DegenerateQueryError, UnsupportedConditioningError
from .trees import LeafRegion, Tree, TreeEnsemble

__all__ = [
    "ReducedValue",
    "shap_reduced",
    "discrete_reduced",
    "leaf_reduced",
]


@dataclass(frozen=True)
class ReducedValue:
    value: float
    leaf_weights: dict  # (tree index, leaf id) -> probability estimate
    normalizers: tuple[float, ...] | None = None  # per tree, leaf estimator only

    @property
    def normalizer(self) -> float | None:
        if self.normalizers is None:
            return None
        if len(self.normalizers) == 1:
            return self.normalizers[0]
        raise ValueError("per-tree normalizers; index into .normalizers")

    @property
    def game_value(self) -> float:
        return getattr(self, "_game_value", self.value)


def _with_game_value(rv: ReducedValue, gv: float) -> ReducedValue:
    object.__setattr__(rv, "_game_value", gv)
    return rv


def _leaf_constraints(region: LeafRegion, cols: Iterable[int]) -> dict[int, Between]:
    return {
        c: Between(region.lower[c], region.upper[c])
        for c in cols
        if c in region.used_features
    }


def shap_reduced(ensemble: TreeEnsemble, S: Iterable[int], x) -> ReducedValue:
    """Path-dependent reduced predictor.

    At a node splitting on a conditioned column the walk follows the side
    containing x with weight 1; otherwise both children are visited and the
    running weight is multiplied by the child/parent training-count ratio.
    """
    x = np.asarray(x, dtype=float)
    S = frozenset(S)
    weights: dict[tuple[int, int], float] = {}
    total = 0.0
    for t, tree in enumerate(ensemble.trees):
        stack = [(0, 1.0)]
        while stack:
            nid, w = stack.pop()
            node = tree.nodes[nid]
            if node.is_leaf:
                weights[(t, nid)] = weights.get((t, nid), 0.0) + w
                total += w * node.value
                continue
            if node.feature in S:
                child = node.left if x[node.feature] <= node.threshold else node.right
                stack.append((child, w))
            else:
                if node.count == 0:
                    raise DegenerateQueryError(
                        f"tree {t} node {nid} has zero training count on an "
                        "unconditioned branch"
                    )
                stack.append((node.left, w * tree.nodes[node.left].count / node.count))
                stack.append((node.right, w * tree.nodes[node.right].count / node.count))
    return ReducedValue(ensemble.agg_scale * total, weights)


def discrete_reduced(ensemble: TreeEnsemble, ds: Dataset, S: Iterable[int], x) -> ReducedValue:
    """Plug-in conditional expectation over exact matches of x_S.

    Every conditioned column must be categorical/indicator (discretize
    continuous columns first with ``quantile_discretize``).
    """
    x = np.asarray(x, dtype=float)
    S = frozenset(S)
    for c in S:
        if not ds.meta[c].is_discrete:
            raise UnsupportedConditioningError(
                f"column {ds.meta[c].name!r} is continuous; run quantile_discretize "
                "before conditioning on it",
                subset=S,
            )
    exact = {c: EqualTo(x[c]) for c in S}
    n_match = count_region(ds, exact)
    if n_match == 0:
        raise UnsupportedConditioningError(
            f"no observation matches the conditioning values on columns {sorted(S)}",
            subset=S,
            values={c: x[c] for c in sorted(S)},
        )
    weights: dict[tuple[int, int], float] = {}
    total = 0.0
    for t, tree in enumerate(ensemble.trees):
        for region in tree.leaf_regions:
            if not region.contains(x, S & region.used_features):
                continue
            joint = dict(exact)
            joint.update(_leaf_constraints(region, region.used_features - S))
            # columns in both S and the leaf path: the exact match already
            # implies the interval for compatible leaves
            n_joint = count_region(ds, joint)
            if n_joint == 0:
                continue
            w = n_joint / n_match
            weights[(t, region.leaf_id)] = w
            total += w * region.value
    return ReducedValue(ensemble.agg_scale * total, weights)


def leaf_reduced(ensemble: TreeEnsemble, ds: Dataset, S: Iterable[int], x) -> ReducedValue:
    """Leaf-projection reduced predictor with its normalizing constant.

    Leaves whose projected region holds no data are excluded from both the
    sum and the normalizer; if every compatible leaf of some tree is
    excluded the query is degenerate.
    """
    x = np.asarray(x, dtype=float)
    S = frozenset(S)
    weights: dict[tuple[int, int], float] = {}
    normalizers = []
    total = 0.0
    game_total = 0.0
    for t, tree in enumerate(ensemble.trees):
        z = 0.0
        acc = 0.0
        terms = []
        for region in tree.leaf_regions:
            if not region.contains(x, S & region.used_features):
                continue
            n_leaf = count_region(ds, _leaf_constraints(region, region.used_features))
            n_proj = count_region(ds, _leaf_constraints(region, S))
            if n_proj == 0:
                continue
            ratio = n_leaf / n_proj
            z += ratio
            acc += ratio * region.value
            terms.append((region.leaf_id, ratio))
        if z == 0.0:
            raise DegenerateQueryError(
                f"tree {t}: every compatible leaf is empty under the conditioning"
            )
        for leaf_id, ratio in terms:
            weights[(t, leaf_id)] = ratio / z
        normalizers.append(z)
        total += acc / z
        game_total += acc
    rv = ReducedValue(
        ensemble.agg_scale * total, weights, normalizers=tuple(normalizers)
    )
    return _with_game_value(rv, ensemble.agg_scale * game_total)

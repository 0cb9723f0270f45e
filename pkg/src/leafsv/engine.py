"""Shapley value engine.

Two routes to the same attributions:

* ``brute_force_sv`` enumerates every player subset and combines reduced
  values with the Shapley kernel; works with any estimator or a custom
  value function.  Exponential in the number of players.
* ``multi_games_sv`` decomposes the leaf-estimator game into one small game
  per leaf, each over only the players split on along that leaf's path,
  with a combinatorial reweighting that makes the decomposition exact.
  Exponential only in tree depth.

Batch variants vectorize over instances and share count work between
queries; the per-instance functions wrap them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .data import Dataset, PlayerPartition
from .estimators import discrete_reduced, leaf_reduced, shap_reduced
from .exceptions import ConfigError, UnsupportedConditioningError
from .trees import TreeEnsemble

__all__ = [
    "SVReport",
    "shapley_kernel",
    "multi_games_weight",
    "brute_force_sv",
    "brute_force_batch",
    "multi_games_sv",
    "multi_games_batch",
    "coalition_sv_categorical",
    "global_importance",
]

ESTIMATORS = ("shap_path", "discrete", "leaf")


@dataclass
class SVReport:
    players: PlayerPartition
    phi: np.ndarray
    base_value: float
    prediction: float
    estimator: str
    algorithm: str
    instance: int | str | None = None

    @property
    def efficiency_residual(self) -> float:
        return self.prediction - self.base_value - float(self.phi.sum())

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "estimator": self.estimator,
            "algorithm": self.algorithm,
            "base_value": self.base_value,
            "prediction": self.prediction,
            "phi": {
                label: float(v) for label, v in zip(self.players.labels, self.phi)
            },
            "efficiency_residual": self.efficiency_residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def shapley_kernel(P: int) -> np.ndarray:
    """w[s] such that phi_j = sum over S (j not in S) of w[|S|] (v(S+j)-v(S))."""
    return np.array([1.0 / (P * math.comb(P - 1, s)) for s in range(P)])


@lru_cache(maxsize=None)
def multi_games_weight(s: int, sm: int, P: int) -> float:
    """Collapsed Shapley kernel for a leaf game over sm of P players.

    Equals the sum of the full-game kernel over every superset obtained by
    adding players the leaf never splits on to a subset of size s.
    """
    w = 1.0 / math.comb(P - 1, s)
    for k in range(1, P - sm + 1):
        w += math.comb(P - sm, k) / math.comb(P - 1, k + s)
    return w


def _check_guard(P: int, max_players: int) -> None:
    if P > max_players:
        raise ConfigError(
            f"{P} players exceed the subset-enumeration guard ({max_players}); "
            "raise max_players explicitly if this is intentional"
        )


def _value_fn_for(ensemble, ds, x, estimator) -> Callable[[frozenset], float]:
    if estimator == "shap_path":
        return lambda cols: shap_reduced(ensemble, cols, x).game_value
    if estimator == "discrete":
        return lambda cols: discrete_reduced(ensemble, ds, cols, x).game_value
    if estimator == "leaf":
        return lambda cols: leaf_reduced(ensemble, ds, cols, x).game_value
    raise ConfigError(f"unknown estimator {estimator!r}")


def brute_force_sv(
    x,
    players: PlayerPartition,
    ensemble: TreeEnsemble | None = None,
    ds: Dataset | None = None,
    estimator: str = "leaf",
    value_fn: Callable[[frozenset], float] | None = None,
    max_players: int = 20,
    instance=None,
) -> SVReport:
    """Exact Shapley values by subset enumeration.

    ``value_fn`` overrides the estimator: it receives the expanded raw-column
    set of each player subset and returns the game value (used to plug in
    analytic or Monte-Carlo oracles).
    """
    P = len(players)
    _check_guard(P, max_players)
    if value_fn is None:
        if ensemble is None:
            raise ConfigError("either an ensemble+estimator or a value_fn is required")
        value_fn = _value_fn_for(ensemble, ds, x, estimator)
        tag = estimator
    else:
        tag = "value_fn" if estimator not in ESTIMATORS else estimator
    v = np.empty(1 << P)
    for mask in range(1 << P):
        cols = players.expand(i for i in range(P) if mask >> i & 1)
        v[mask] = value_fn(cols)
    kernel = shapley_kernel(P)
    phi = np.zeros(P)
    for mask in range(1 << P):
        s = bin(mask).count("1")
        for j in range(P):
            if not mask >> j & 1:
                phi[j] += kernel[s] * (v[mask | (1 << j)] - v[mask])
    full = (1 << P) - 1
    # datasets may carry appended indicator columns past the model features
    prediction = (
        float(ensemble.predict(np.asarray(x, dtype=float)[: ensemble.n_features]))
        if ensemble is not None
        else float(v[full])
    )
    return SVReport(
        players, phi, float(v[0]), prediction, tag, "brute_force", instance
    )


# ---------------------------------------------------------------------------
# batch machinery


def _leaf_tables(tree, ds: Dataset, X: np.ndarray):
    """Per-leaf masks used by both the batch value function and multi-games.

    Yields (region, used, row_masks, inst_masks, n_leaf) for every leaf that
    holds at least one reference observation.
    """
    vals = ds.values
    for region in tree.leaf_regions:
        used = sorted(region.used_features)
        row_masks = {}
        inst_masks = {}
        full = np.ones(vals.shape[0], dtype=bool)
        for c in used:
            rm = (vals[:, c] > region.lower[c]) & (vals[:, c] <= region.upper[c])
            row_masks[c] = rm
            full &= rm
            inst_masks[c] = (X[:, c] > region.lower[c]) & (X[:, c] <= region.upper[c])
        n_leaf = int(full.sum())
        if n_leaf == 0:
            continue
        yield region, used, row_masks, inst_masks, n_leaf


def _leaf_subset_values(ensemble, ds, X, col_subsets: Sequence[frozenset]) -> np.ndarray:
    n_inst = X.shape[0]
    n_rows = ds.n
    V = np.zeros((n_inst, len(col_subsets)))
    scale = ensemble.agg_scale
    for tree in ensemble.trees:
        for region, used, row_masks, inst_masks, n_leaf in _leaf_tables(tree, ds, X):
            memo: dict[tuple, np.ndarray] = {}
            for k, cols in enumerate(col_subsets):
                key = tuple(c for c in used if c in cols)
                term = memo.get(key)
                if term is None:
                    rmask = np.ones(n_rows, dtype=bool)
                    ind = np.ones(n_inst, dtype=bool)
                    for c in key:
                        rmask &= row_masks[c]
                        ind &= inst_masks[c]
                    term = ind * (n_leaf / int(rmask.sum()))
                    memo[key] = term
                V[:, k] += scale * region.value * term
    return V


def _shap_subset_values(ensemble, X, col_subsets: Sequence[frozenset]) -> np.ndarray:
    n_inst = X.shape[0]
    V = np.zeros((n_inst, len(col_subsets)))
    for k, cols in enumerate(col_subsets):
        acc = np.zeros(n_inst)
        for tree in ensemble.trees:
            stack = [(0, np.ones(n_inst))]
            while stack:
                nid, w = stack.pop()
                node = tree.nodes[nid]
                if node.is_leaf:
                    acc += w * node.value
                    continue
                if node.feature in cols:
                    leq = X[:, node.feature] <= node.threshold
                    stack.append((node.left, w * leq))
                    stack.append((node.right, w * ~leq))
                else:
                    if node.count == 0:
                        raise UnsupportedConditioningError(
                            f"node {nid} has zero training count on an "
                            "unconditioned branch"
                        )
                    stack.append((node.left, w * (tree.nodes[node.left].count / node.count)))
                    stack.append((node.right, w * (tree.nodes[node.right].count / node.count)))
        V[:, k] = ensemble.agg_scale * acc
    return V


def _discrete_subset_values(ensemble, ds, X, col_subsets: Sequence[frozenset]) -> np.ndarray:
    # exact-match conditional mean of the model over the reference rows
    for cols in col_subsets:
        for c in cols:
            if not ds.meta[c].is_discrete:
                raise UnsupportedConditioningError(
                    f"column {ds.meta[c].name!r} is continuous; discretize first"
                )
    preds = ensemble.predict_batch(ds.values)
    n_inst = X.shape[0]
    V = np.zeros((n_inst, len(col_subsets)))
    for k, cols in enumerate(col_subsets):
        cl = sorted(cols)
        for i in range(n_inst):
            mask = np.ones(ds.n, dtype=bool)
            for c in cl:
                mask &= ds.values[:, c] == X[i, c]
            n_match = int(mask.sum())
            if n_match == 0:
                raise UnsupportedConditioningError(
                    f"instance {i}: no observation matches columns {cl}",
                    subset=frozenset(cols),
                    instance=i,
                )
            V[i, k] = preds[mask].mean()
    return V


def subset_values_batch(ensemble, ds, X, col_subsets, estimator) -> np.ndarray:
    if estimator == "shap_path":
        return _shap_subset_values(ensemble, X, col_subsets)
    if estimator == "leaf":
        return _leaf_subset_values(ensemble, ds, X, col_subsets)
    if estimator == "discrete":
        return _discrete_subset_values(ensemble, ds, X, col_subsets)
    raise ConfigError(f"unknown estimator {estimator!r}")


def brute_force_batch(
    ensemble: TreeEnsemble,
    ds: Dataset | None,
    X,
    players: PlayerPartition,
    estimator: str = "leaf",
    max_players: int = 20,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized subset enumeration; returns (phi, base_values, predictions)."""
    X = np.asarray(X, dtype=float)
    P = len(players)
    _check_guard(P, max_players)
    col_subsets = [
        players.expand(i for i in range(P) if mask >> i & 1) for mask in range(1 << P)
    ]
    V = subset_values_batch(ensemble, ds, X, col_subsets, estimator)
    kernel = shapley_kernel(P)
    phi = np.zeros((X.shape[0], P))
    for mask in range(1 << P):
        s = bin(mask).count("1")
        for j in range(P):
            if not mask >> j & 1:
                phi[:, j] += kernel[s] * (V[:, mask | (1 << j)] - V[:, mask])
    return phi, V[:, 0].copy(), ensemble.predict_batch(X[:, : ensemble.n_features])


def multi_games_batch(
    ensemble: TreeEnsemble,
    ds: Dataset,
    X,
    players: PlayerPartition,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Leaf-game decomposition of the leaf-estimator Shapley values.

    Returns (phi, base_values, predictions, ops) where ops counts subset
    evaluations across leaf games; it grows with 2^(path length), not with
    the number of players.
    """
    X = np.asarray(X, dtype=float)
    P = len(players)
    n_inst = X.shape[0]
    n_rows = ds.n
    phi = np.zeros((n_inst, P))
    base = np.zeros(n_inst)
    scale = ensemble.agg_scale
    ops = 0
    col_owner = {}
    for i, group in enumerate(players.players):
        for c in group:
            col_owner[c] = i
    for tree in ensemble.trees:
        for region, used, row_masks, inst_masks, n_leaf in _leaf_tables(tree, ds, X):
            base += scale * region.value * (n_leaf / n_rows)
            local = sorted({col_owner[c] for c in used if c in col_owner})
            cols_of = {
                i: [c for c in players.players[i] if c in region.used_features]
                for i in local
            }
            sm = len(local)
            fv = scale * region.value
            # one game value per subset of the players used on this path
            g: list[np.ndarray] = [None] * (1 << sm)
            for mask in range(1 << sm):
                rmask = np.ones(n_rows, dtype=bool)
                ind = np.ones(n_inst, dtype=bool)
                for b in range(sm):
                    if mask >> b & 1:
                        for c in cols_of[local[b]]:
                            rmask &= row_masks[c]
                            ind &= inst_masks[c]
                g[mask] = ind * (n_leaf / int(rmask.sum()))
                ops += 1
            for b, i in enumerate(local):
                bit = 1 << b
                w_cache = {}
                for mask in range(1 << sm):
                    if mask & bit:
                        continue
                    s = bin(mask).count("1")
                    w = w_cache.get(s)
                    if w is None:
                        w = multi_games_weight(s, sm, P) / P
                        w_cache[s] = w
                    phi[:, i] += w * fv * (g[mask | bit] - g[mask])
    return phi, base, ensemble.predict_batch(X), ops


def multi_games_sv(
    x,
    players: PlayerPartition,
    ensemble: TreeEnsemble,
    ds: Dataset,
    instance=None,
) -> SVReport:
    x = np.asarray(x, dtype=float)
    phi, base, pred, _ = multi_games_batch(ensemble, ds, x[None, :], players)
    return SVReport(
        players, phi[0], float(base[0]), float(pred[0]), "leaf", "multi_games", instance
    )


def coalition_sv_categorical(
    x,
    partition: PlayerPartition,
    ensemble: TreeEnsemble,
    ds: Dataset,
    estimator: str = "discrete",
    instance=None,
) -> SVReport:
    """Shapley values with encoded indicator columns fused into coalitions.

    Requires that every indicator column derived from one source column sits
    in the same player group: splitting a coalition silently changes the
    game.  Infeasible indicator patterns never contribute because the
    discrete estimator only averages over observed rows.
    """
    grouped: dict[int, set[int]] = {}
    covered = set()
    for group in partition.players:
        for c in group:
            covered.add(c)
            src = ds.meta[c].source_feature
            if ds.meta[c].kind == "indicator" and src is not None:
                grouped.setdefault(src, set()).add(c)
    for src, cols in grouped.items():
        siblings = {
            j
            for j, m in enumerate(ds.meta)
            if m.kind == "indicator" and m.source_feature == src and j in covered
        }
        for group in partition.players:
            gset = set(group)
            if gset & siblings and not siblings <= gset:
                raise ConfigError(
                    f"indicator columns {sorted(siblings)} of source column {src} "
                    "are split across player groups"
                )
    return brute_force_sv(
        x, partition, ensemble=ensemble, ds=ds, estimator=estimator, instance=instance
    )


@dataclass(frozen=True)
class GlobalImportance:
    values: np.ndarray  # sum of |phi| per player
    ranking: tuple[int, ...]  # player indices, most important first
    labels: tuple[str, ...]


def global_importance(reports: Sequence[SVReport]) -> GlobalImportance:
    """Sum of absolute attributions across instances, plus the player ranking."""
    if not reports:
        raise ConfigError("no reports given")
    partition = reports[0].players
    for r in reports[1:]:
        if r.players.players != partition.players:
            raise ConfigError("reports mix different player partitions")
    totals = np.zeros(len(partition))
    for r in reports:
        totals += np.abs(r.phi)
    order = sorted(range(len(partition)), key=lambda j: (-totals[j], j))
    return GlobalImportance(totals, tuple(order), partition.labels)

"""Marshaling shim between numeric arrays and the leafsv engine."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from leafsv import (
    DatasetError,
    ModelParseError,
    ModelValidationError,
    PlayerPartition,
    TreeEnsemble,
    brute_force_batch,
    load_dataset,
    multi_games_batch,
    parse_model,
    quantile_discretize,
)
from leafsv.data import Dataset
from leafsv.exceptions import ConfigError

__all__ = ["ExplainerHandle", "ValidationError", "load_explainer", "explain"]


class ValidationError(ValueError):
    """Model or data failed the core package's validation; carries the
    original message (including the offending node/row)."""


@dataclass(frozen=True)
class ExplainerHandle:
    """Immutable bundle of parsed model, reference data and defaults.

    Safe to share across threads: every field is read-only and explain
    calls never mutate the handle.
    """

    ensemble: TreeEnsemble
    dataset: Dataset
    players: PlayerPartition
    defaults: Mapping[str, object] = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.ensemble.n_features


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def load_explainer(
    model_path: str,
    data_path: str,
    schema_path: str,
    options: Mapping[str, object] | None = None,
) -> ExplainerHandle:
    """Parse the model/data/schema files into a reusable handle.

    ``options`` may carry ``players`` (path to a partition JSON), ``q``
    (quantile-discretize all continuous columns), and default ``estimator``
    / ``algorithm`` values picked up by :func:`explain`.

    Missing files raise ``FileNotFoundError``; structurally invalid inputs
    raise :class:`ValidationError` with the core package's message.
    """
    options = dict(options or {})
    try:
        ensemble = parse_model(json.loads(_read(model_path)))
        ds = load_dataset(_read(data_path), _read(schema_path))
    except (ModelParseError, ModelValidationError, DatasetError) as exc:
        raise ValidationError(str(exc)) from exc
    if ds.p != ensemble.n_features:
        raise ValidationError(
            f"data has {ds.p} columns but the model expects {ensemble.n_features}"
        )
    if options.get("q") is not None:
        cont = [j for j, m in enumerate(ds.meta) if m.kind == "continuous"]
        ds = quantile_discretize(ds, cont, q=int(options.pop("q"))).dataset
    if "players" in options:
        players = PlayerPartition.from_json(_read(str(options.pop("players"))))
    else:
        names = ensemble.feature_names or tuple(
            f"x{j}" for j in range(ensemble.n_features)
        )
        players = PlayerPartition.singletons(ensemble.n_features, names)
    return ExplainerHandle(ensemble, ds, players, options)


def explain(
    handle: ExplainerHandle,
    X,
    estimator: str | None = None,
    algorithm: str | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Attribute a batch of query points.

    Returns ``(phi, base_values)`` with one row of ``phi`` per instance and
    one player column per partition group.  Every computation is exact and
    deterministic, so ``seed`` exists only for interface stability.
    """
    estimator = estimator or str(handle.defaults.get("estimator", "leaf"))
    algorithm = algorithm or str(handle.defaults.get("algorithm", "brute_force"))
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-d, got shape {X.shape}")
    if X.shape[1] != handle.dataset.p:
        raise ValueError(
            f"X has {X.shape[1]} columns, expected {handle.dataset.p}"
        )
    if algorithm == "multi_games":
        if estimator != "leaf":
            raise ConfigError("multi_games supports only the leaf estimator")
        phi, base, _, _ = multi_games_batch(
            handle.ensemble, handle.dataset, X, handle.players
        )
    elif algorithm == "brute_force":
        phi, base, _ = brute_force_batch(
            handle.ensemble, handle.dataset, X, handle.players, estimator
        )
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    return phi, base

"""Tree ensemble model: parsing, leaf geometry and compatible-leaf queries.

A model is an additive collection of axis-aligned binary decision trees.
Splits route left when ``x[feature] <= threshold``, so every leaf is a
product of half-open intervals ``(a, b]`` and the leaves of one tree tile
the whole input space exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import ModelParseError, ModelValidationError

__all__ = [
    "TreeNode",
    "LeafRegion",
    "Tree",
    "TreeEnsemble",
    "parse_model",
    "dump_model",
    "transform_thresholds",
]


@dataclass(frozen=True)
class TreeNode:
    node_id: int
    feature: int | None
    threshold: float | None
    left: int | None
    right: int | None
    value: float | None
    count: int

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class LeafRegion:
    """Interval-product description of one leaf.

    ``lower``/``upper`` have one entry per model column; unused columns keep
    the (-inf, +inf] sentinels. ``used_features`` holds the distinct split
    columns on the root-to-leaf path.
    """

    leaf_id: int
    lower: np.ndarray
    upper: np.ndarray
    used_features: frozenset[int]
    depth: int
    value: float
    count: int

    def contains(self, x: np.ndarray, cols: Iterable[int] | None = None) -> bool:
        idx = list(self.used_features if cols is None else cols)
        if not idx:
            return True
        xi = np.asarray(x)[idx]
        return bool(np.all((xi > self.lower[idx]) & (xi <= self.upper[idx])))


class Tree:
    """A single decision tree rooted at node id 0."""

    def __init__(self, nodes: Mapping[int, TreeNode], n_features: int):
        self.nodes = dict(nodes)
        self.n_features = n_features
        self._validate()

    def _validate(self) -> None:
        if 0 not in self.nodes:
            raise ModelValidationError("tree has no root node (id 0)")
        seen_children: set[int] = set()
        for node in self.nodes.values():
            if node.is_leaf:
                if node.value is None or not math.isfinite(node.value):
                    raise ModelValidationError(
                        f"leaf node {node.node_id} has non-finite value"
                    )
            else:
                if node.threshold is None or not math.isfinite(node.threshold):
                    raise ModelValidationError(
                        f"internal node {node.node_id} has non-finite threshold"
                    )
                if not (0 <= node.feature < self.n_features):
                    raise ModelValidationError(
                        f"node {node.node_id} splits on feature {node.feature}, "
                        f"but the model has {self.n_features} features"
                    )
                for child_id in (node.left, node.right):
                    if child_id not in self.nodes:
                        raise ModelValidationError(
                            f"node {node.node_id} references missing child {child_id}"
                        )
                    if child_id in seen_children:
                        raise ModelValidationError(
                            f"node {child_id} has more than one parent"
                        )
                    seen_children.add(child_id)
                left, right = self.nodes[node.left], self.nodes[node.right]
                if left.count + right.count != node.count:
                    raise ModelValidationError(
                        f"node {node.node_id} count {node.count} != "
                        f"{left.count} + {right.count} of its children"
                    )
            if node.count < 0:
                raise ModelValidationError(f"node {node.node_id} has negative count")
        # the root must reach every node exactly once
        reached = set()
        stack = [0]
        while stack:
            nid = stack.pop()
            if nid in reached:
                raise ModelValidationError(f"node {nid} reachable twice from root")
            reached.add(nid)
            node = self.nodes[nid]
            if not node.is_leaf:
                stack.extend((node.left, node.right))
        if reached != set(self.nodes):
            orphans = sorted(set(self.nodes) - reached)
            raise ModelValidationError(f"nodes {orphans} unreachable from root")

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def leaf_of(self, x: np.ndarray) -> int:
        node = self.root
        while not node.is_leaf:
            node = self.nodes[node.left if x[node.feature] <= node.threshold else node.right]
        return node.node_id

    def predict1(self, x: np.ndarray) -> float:
        return self.nodes[self.leaf_of(x)].value

    @cached_property
    def leaf_regions(self) -> tuple[LeafRegion, ...]:
        p = self.n_features
        out: list[LeafRegion] = []
        lower = np.full(p, -np.inf)
        upper = np.full(p, np.inf)

        def walk(nid: int, lower: np.ndarray, upper: np.ndarray, used: frozenset[int], depth: int):
            node = self.nodes[nid]
            if node.is_leaf:
                out.append(
                    LeafRegion(nid, lower, upper, used, depth, node.value, node.count)
                )
                return
            f, t = node.feature, node.threshold
            lo = lower.copy()
            hi = upper.copy()
            hi[f] = min(hi[f], t)
            lo2 = lower.copy()
            lo2[f] = max(lo2[f], t)
            if lo[f] >= hi[f] or lo2[f] >= upper[f]:
                raise ModelValidationError(
                    f"node {nid} repeats feature {f} with a contradictory threshold"
                )
            walk(node.left, lo, hi, used | {f}, depth + 1)
            walk(node.right, lo2, upper, used | {f}, depth + 1)

        walk(0, lower, upper, frozenset(), 0)
        return tuple(out)

    @cached_property
    def regions_by_id(self) -> dict[int, LeafRegion]:
        return {r.leaf_id: r for r in self.leaf_regions}

    def compatible_leaves(self, S: Iterable[int], x: np.ndarray) -> list[int]:
        """Leaf ids whose projection onto the columns S contains x_S."""
        cols = set(S)
        return [
            r.leaf_id
            for r in self.leaf_regions
            if r.contains(x, cols & r.used_features)
        ]


@dataclass(eq=False)
class TreeEnsemble:
    trees: tuple[Tree, ...]
    n_features: int
    aggregation: str = "sum"
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.aggregation not in ("sum", "average"):
            raise ModelValidationError(f"unknown aggregation {self.aggregation!r}")

    @property
    def agg_scale(self) -> float:
        return 1.0 / len(self.trees) if self.aggregation == "average" else 1.0

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(
                f"expected a point with {self.n_features} coordinates, got shape {x.shape}"
            )
        return self.agg_scale * sum(t.predict1(x) for t in self.trees)

    def predict_batch(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected an (n, {self.n_features}) matrix, got shape {X.shape}"
            )
        from ._batch import ensemble_predict

        return ensemble_predict(self, X)


def _node_from_dict(raw: Mapping, path: str) -> TreeNode:
    def need(key, kind):
        if key not in raw:
            raise ModelParseError(f"{path}: missing field {key!r}")
        return raw[key]

    nid = need("id", int)
    count = need("count", int)
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise ModelParseError(f"{path}.count: expected a non-negative integer")
    feature = raw.get("feature")
    if feature is None:
        value = raw.get("value")
        if value is None:
            raise ModelParseError(f"{path}.value: leaf nodes need a numeric value")
        return TreeNode(nid, None, None, None, None, float(value), count)
    threshold = raw.get("threshold")
    left, right = raw.get("left"), raw.get("right")
    if threshold is None or left is None or right is None:
        raise ModelParseError(
            f"{path}: internal nodes need 'threshold', 'left' and 'right'"
        )
    return TreeNode(nid, int(feature), float(threshold), int(left), int(right), None, count)


def parse_model(document: str | Mapping) -> TreeEnsemble:
    """Parse a model dump (JSON text or an already-decoded mapping).

    Schema::

        {"n_features": int, "aggregation": "sum"|"average",
         "trees": [{"nodes": [{"id", "feature", "threshold",
                               "left", "right", "value", "count"}, ...]}]}
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise ModelParseError(f"invalid JSON: {e}") from e
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise ModelParseError("top level: expected an object")
    for key in ("n_features", "trees"):
        if key not in doc:
            raise ModelParseError(f"top level: missing field {key!r}")
    p = doc["n_features"]
    if not isinstance(p, int) or p < 1:
        raise ModelParseError("n_features: expected a positive integer")
    aggregation = doc.get("aggregation", "sum")
    if aggregation not in ("sum", "average"):
        raise ModelParseError("aggregation: expected 'sum' or 'average'")
    trees = []
    for ti, traw in enumerate(doc["trees"]):
        if "nodes" not in traw:
            raise ModelParseError(f"trees[{ti}]: missing field 'nodes'")
        nodes = {}
        for ni, nraw in enumerate(traw["nodes"]):
            node = _node_from_dict(nraw, f"trees[{ti}].nodes[{ni}]")
            if node.node_id in nodes:
                raise ModelParseError(
                    f"trees[{ti}].nodes[{ni}]: duplicate node id {node.node_id}"
                )
            nodes[node.node_id] = node
        trees.append(Tree(nodes, p))
    names = doc.get("feature_names")
    return TreeEnsemble(
        trees=tuple(trees),
        n_features=p,
        aggregation=aggregation,
        feature_names=tuple(names) if names else None,
    )


def dump_model(ensemble: TreeEnsemble) -> dict:
    """Inverse of :func:`parse_model`."""
    trees = []
    for tree in ensemble.trees:
        nodes = []
        for nid in sorted(tree.nodes):
            n = tree.nodes[nid]
            if n.is_leaf:
                nodes.append({"id": n.node_id, "value": n.value, "count": n.count})
            else:
                nodes.append(
                    {
                        "id": n.node_id,
                        "feature": n.feature,
                        "threshold": n.threshold,
                        "left": n.left,
                        "right": n.right,
                        "count": n.count,
                    }
                )
        trees.append({"nodes": nodes})
    out = {
        "n_features": ensemble.n_features,
        "aggregation": ensemble.aggregation,
        "trees": trees,
    }
    if ensemble.feature_names:
        out["feature_names"] = list(ensemble.feature_names)
    return out


def transform_thresholds(ensemble: TreeEnsemble, maps: Sequence) -> TreeEnsemble:
    """Apply strictly increasing per-feature maps to all split thresholds.

    ``maps[i]`` is a callable applied to every threshold on feature ``i``.
    Used together with the same transform of the data and query points to
    check that attributions only depend on order statistics.
    """
    trees = []
    for tree in ensemble.trees:
        nodes = {}
        for nid, n in tree.nodes.items():
            if n.is_leaf:
                nodes[nid] = n
            else:
                nodes[nid] = TreeNode(
                    n.node_id, n.feature, float(maps[n.feature](n.threshold)),
                    n.left, n.right, None, n.count,
                )
        trees.append(Tree(nodes, ensemble.n_features))
    return TreeEnsemble(
        tuple(trees), ensemble.n_features, ensemble.aggregation, ensemble.feature_names
    )

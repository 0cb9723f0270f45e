"""Built-in demonstration model: a single 15-node regression tree over four
features, with training counts on every node.  Used by the docs, the CLI
``synth`` command, and the golden-value tests."""

from __future__ import annotations

import copy

from .trees import TreeEnsemble, parse_model

__all__ = ["demo_model_document", "demo_model"]

_DEMO_DOC = {
    "n_features": 4,
    "aggregation": "sum",
    "feature_names": ["x0", "x1", "x2", "x3"],
    "trees": [
        {
            "nodes": [
                {"id": 0, "feature": 1, "threshold": 0.305, "left": 1, "right": 8, "count": 335},
                {"id": 1, "feature": 2, "threshold": -0.048, "left": 2, "right": 5, "count": 202},
                {"id": 2, "feature": 0, "threshold": 0.0, "left": 3, "right": 4, "count": 105},
                {"id": 3, "value": -10.0, "count": 60},
                {"id": 4, "value": 12.0, "count": 45},
                {"id": 5, "feature": 1, "threshold": -0.536, "left": 6, "right": 7, "count": 97},
                {"id": 6, "value": -51.85, "count": 51},
                {"id": 7, "value": 50.716, "count": 46},
                {"id": 8, "feature": 3, "threshold": 0.207, "left": 9, "right": 12, "count": 133},
                {"id": 9, "feature": 0, "threshold": -0.191, "left": 10, "right": 11, "count": 82},
                {"id": 10, "value": 0.0, "count": 0},
                {"id": 11, "value": 73.971, "count": 82},
                {"id": 12, "feature": 1, "threshold": 1.585, "left": 13, "right": 14, "count": 51},
                {"id": 13, "value": 145.955, "count": 44},
                {"id": 14, "value": 318.125, "count": 7},
            ]
        }
    ],
}


def demo_model_document() -> dict:
    """A fresh copy of the demo model as a plain JSON-able dict."""
    return copy.deepcopy(_DEMO_DOC)


def demo_model() -> TreeEnsemble:
    return parse_model(demo_model_document())

"""Model parsing, leaf geometry and compatible-leaf queries."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import leafsv as lv
from leafsv.exceptions import ModelParseError, ModelValidationError


# ---------------------------------------------------------------------------
# parsing


def test_parse_roundtrip(demo):
    doc = lv.dump_model(demo)
    again = lv.parse_model(json.dumps(doc))
    assert lv.dump_model(again) == doc


def test_parse_rejects_bad_json():
    with pytest.raises(ModelParseError):
        lv.parse_model("{not json")


def test_parse_names_offending_node():
    doc = lv.demo_model_document()
    del doc["trees"][0]["nodes"][3]["value"]
    with pytest.raises(ModelParseError, match=r"trees\[0\].nodes\[3\]"):
        lv.parse_model(doc)


def test_validation_count_mismatch():
    doc = lv.demo_model_document()
    doc["trees"][0]["nodes"][3]["count"] = 61  # 61 + 45 != 105
    with pytest.raises(ModelValidationError, match="count"):
        lv.parse_model(doc)


def test_validation_missing_child():
    doc = lv.demo_model_document()
    doc["trees"][0]["nodes"][0]["left"] = 99
    with pytest.raises(ModelValidationError, match="99"):
        lv.parse_model(doc)


def test_validation_unknown_feature():
    doc = lv.demo_model_document()
    doc["trees"][0]["nodes"][0]["feature"] = 7
    with pytest.raises(ModelValidationError, match="feature 7"):
        lv.parse_model(doc)


def test_contradictory_repeated_feature_rejected():
    # root: x0 <= 0; right child asks x0 <= -1, which is empty on that side
    doc = {
        "n_features": 1,
        "trees": [{"nodes": [
            {"id": 0, "feature": 0, "threshold": 0.0, "left": 1, "right": 2, "count": 4},
            {"id": 1, "value": 1.0, "count": 2},
            {"id": 2, "feature": 0, "threshold": -1.0, "left": 3, "right": 4, "count": 2},
            {"id": 3, "value": 2.0, "count": 0},
            {"id": 4, "value": 3.0, "count": 2},
        ]}],
    }
    ens = lv.parse_model(doc)
    with pytest.raises(ModelValidationError, match="contradictory"):
        ens.trees[0].leaf_regions


# ---------------------------------------------------------------------------
# geometry


def test_demo_leaf_partition(demo):
    tree = demo.trees[0]
    assert len(tree.leaf_regions) == 8
    assert sum(r.count for r in tree.leaf_regions) == tree.root.count == 335


def test_regions_tile_space(demo, rng):
    """Every random point lands in exactly one leaf region per tree."""
    tree = demo.trees[0]
    for _ in range(200):
        x = rng.standard_normal(4) * 2
        hits = [r.leaf_id for r in tree.leaf_regions if r.contains(x)]
        assert hits == [tree.leaf_of(x)]


def test_compatible_leaves_golden(demo, demo_query):
    # conditioning on columns 0 and 2 leaves five leaves compatible
    assert demo.trees[0].compatible_leaves({0, 2}, demo_query) == [6, 7, 11, 13, 14]


def test_compatible_leaves_empty_subset_is_all(demo, demo_query):
    tree = demo.trees[0]
    assert tree.compatible_leaves(set(), demo_query) == [r.leaf_id for r in tree.leaf_regions]


def test_compatible_leaves_full_subset_is_prediction_leaf(demo, demo_query):
    tree = demo.trees[0]
    assert tree.compatible_leaves({0, 1, 2, 3}, demo_query) == [tree.leaf_of(demo_query)]


def test_predict_matches_batch(demo, rng):
    X = rng.standard_normal((64, 4)) * 2
    batch = demo.predict_batch(X)
    single = np.array([demo.predict(x) for x in X])
    assert np.array_equal(batch, single)


def test_average_aggregation(demo):
    doc = lv.dump_model(demo)
    doc["trees"] = doc["trees"] * 4
    doc["aggregation"] = "average"
    avg = lv.parse_model(doc)
    x = np.array([0.1, -0.2, 0.3, 0.4])
    assert avg.predict(x) == pytest.approx(demo.predict(x))


def test_threshold_boundary_routes_left(demo):
    # splits are x <= t, so a point exactly at the root threshold goes left
    tree = demo.trees[0]
    x = np.array([0.0, 0.305, 0.5, 0.0])
    leaf = tree.leaf_of(x)
    assert tree.regions_by_id[leaf].upper[1] <= 0.305


# ---------------------------------------------------------------------------
# monotone reparametrization


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_increasing_maps_preserve_compatibility(seed):
    """Strictly increasing per-feature maps applied to thresholds and the
    query leave compatible-leaf id sets unchanged for every subset."""
    rng = np.random.default_rng(seed)
    demo = lv.demo_model()
    scale = 2.0 ** rng.integers(-2, 3, size=4)  # exact powers of two
    shift = rng.integers(-4, 5, size=4).astype(float)
    maps = [
        (lambda t, a=scale[j], b=shift[j]: a * t + b) for j in range(4)
    ]
    mapped = lv.transform_thresholds(demo, maps)
    x = rng.standard_normal(4) * 2
    x_mapped = scale * x + shift
    for mask in range(16):
        S = {j for j in range(4) if mask >> j & 1}
        assert demo.trees[0].compatible_leaves(S, x) == mapped.trees[
            0
        ].compatible_leaves(S, x_mapped)

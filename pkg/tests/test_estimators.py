"""The three reduced predictors against hand-computed count oracles."""

import numpy as np
import pytest

import leafsv as lv
from leafsv.data import Dataset, FeatureMeta
from leafsv.exceptions import DegenerateQueryError, UnsupportedConditioningError

from conftest import make_continuous_dataset


# ---------------------------------------------------------------------------
# path-dependent estimator


def test_shap_reduced_golden(demo, demo_query):
    rv = lv.shap_reduced(demo, {0, 2}, demo_query)
    assert rv.value == pytest.approx(41.98807573472842, abs=1e-9)


def test_shap_reduced_golden_weights(demo, demo_query):
    # hand-propagated count ratios along the unconditioned splits
    rv = lv.shap_reduced(demo, {0, 2}, demo_query)
    w = {leaf: weight for (_, leaf), weight in rv.leaf_weights.items()}
    assert w[6] == pytest.approx(202 / 335 * 51 / 97)
    assert w[7] == pytest.approx(202 / 335 * 46 / 97)
    assert w[11] == pytest.approx(133 / 335 * 82 / 133)
    assert w[13] == pytest.approx(133 / 335 * 51 / 133 * 44 / 51)
    assert w[14] == pytest.approx(133 / 335 * 51 / 133 * 7 / 51)
    assert sum(w.values()) == pytest.approx(1.0)


def test_shap_reduced_empty_subset_is_count_weighted_mean(demo):
    rv = lv.shap_reduced(demo, set(), np.zeros(4))
    tree = demo.trees[0]
    expected = sum(r.value * r.count for r in tree.leaf_regions) / 335
    assert rv.value == pytest.approx(expected)


def test_shap_reduced_full_subset_is_prediction(demo, demo_query):
    rv = lv.shap_reduced(demo, {0, 1, 2, 3}, demo_query)
    assert rv.value == demo.predict(demo_query)


def test_shap_reduced_zero_count_branch_raises():
    doc = {
        "n_features": 2,
        "trees": [{"nodes": [
            {"id": 0, "feature": 0, "threshold": 0.0, "left": 1, "right": 2, "count": 0},
            {"id": 1, "value": 1.0, "count": 0},
            {"id": 2, "value": 2.0, "count": 0},
        ]}],
    }
    ens = lv.parse_model(doc)
    with pytest.raises(DegenerateQueryError):
        lv.shap_reduced(ens, {1}, np.zeros(2))


# ---------------------------------------------------------------------------
# a two-leaf model with a tiny dataset, all weights checkable by hand


@pytest.fixture
def stump():
    doc = {
        "n_features": 2,
        "trees": [{"nodes": [
            {"id": 0, "feature": 0, "threshold": 0.0, "left": 1, "right": 2, "count": 6},
            {"id": 1, "value": 10.0, "count": 4},
            {"id": 2, "value": 20.0, "count": 2},
        ]}],
    }
    return lv.parse_model(doc)


@pytest.fixture
def stump_data():
    # x0 <= 0 rows: 4; x0 > 0 rows: 2; x1 is an indicator
    X = np.array([
        [-1.0, 0.0],
        [-2.0, 0.0],
        [-1.0, 1.0],
        [-3.0, 1.0],
        [1.0, 1.0],
        [2.0, 0.0],
    ])
    meta = (FeatureMeta("x0", "continuous"), FeatureMeta("x1", "indicator"))
    return Dataset(X, meta)


def test_leaf_reduced_ignores_unused_columns(stump, stump_data):
    # the tree never splits on x1, so its projection onto {1} is unbounded
    # and conditioning there returns the count-weighted marginal mean
    rv = lv.leaf_reduced(stump, stump_data, {1}, np.array([0.0, 1.0]))
    assert rv.normalizer == pytest.approx(1.0)
    assert rv.value == pytest.approx(4 / 6 * 10 + 2 / 6 * 20)
    assert rv.leaf_weights[(0, 1)] == pytest.approx(4 / 6)


def test_leaf_reduced_hand_computation():
    # x0 <= 0 -> leaf 1; else split x1 <= 0.5 -> leaves 3/4
    doc = {
        "n_features": 2,
        "trees": [{"nodes": [
            {"id": 0, "feature": 0, "threshold": 0.0, "left": 1, "right": 2, "count": 6},
            {"id": 1, "value": 10.0, "count": 3},
            {"id": 2, "feature": 1, "threshold": 0.5, "left": 3, "right": 4, "count": 3},
            {"id": 3, "value": 20.0, "count": 1},
            {"id": 4, "value": 30.0, "count": 2},
        ]}],
    }
    ens = lv.parse_model(doc)
    X = np.array([
        [-1.0, 0.0], [-2.0, 1.0], [-1.0, 1.0],  # leaf 1
        [1.0, 0.0],                              # leaf 3
        [2.0, 1.0], [1.0, 1.0],                  # leaf 4
    ])
    meta = (FeatureMeta("x0", "continuous"), FeatureMeta("x1", "indicator"))
    ds = Dataset(X, meta)
    rv = lv.leaf_reduced(ens, ds, {1}, np.array([0.0, 1.0]))
    # compatible with x1 = 1: leaf 1 (no x1 bound) and leaf 4 (x1 > 0.5)
    # ratios: N(leaf1)/n = 3/6 and N(leaf4)/N(x1 > 0.5) = 2/4
    z = 3 / 6 + 2 / 4
    assert rv.normalizer == pytest.approx(z)
    assert rv.value == pytest.approx((3 / 6 * 10 + 2 / 4 * 30) / z)
    assert rv.game_value == pytest.approx(3 / 6 * 10 + 2 / 4 * 30)
    assert rv.leaf_weights[(0, 4)] == pytest.approx((2 / 4) / z)


def test_leaf_reduced_empty_subset(stump, stump_data):
    rv = lv.leaf_reduced(stump, stump_data, set(), np.zeros(2))
    # N(L^empty) = n, so weights are the empirical leaf masses
    assert rv.value == pytest.approx(4 / 6 * 10 + 2 / 6 * 20)
    assert rv.normalizer == pytest.approx(1.0)
    assert rv.game_value == pytest.approx(rv.value)


def test_leaf_reduced_full_conditioning_is_prediction(stump, stump_data):
    x = np.array([1.5, 0.0])
    rv = lv.leaf_reduced(stump, stump_data, {0, 1}, x)
    assert rv.value == pytest.approx(stump.predict(x))
    assert rv.game_value == pytest.approx(stump.predict(x))


def test_leaf_reduced_excludes_empty_projection(stump):
    # the only compatible leaf (x0 > 0) holds no reference data
    X = np.array([[-1.0, 0.0], [-2.0, 0.0]])
    meta = (FeatureMeta("x0", "continuous"), FeatureMeta("x1", "indicator"))
    ds = Dataset(X, meta)
    with pytest.raises(DegenerateQueryError):
        lv.leaf_reduced(stump, ds, {0}, np.array([5.0, 0.0]))


def test_discrete_reduced_hand_computation(stump, stump_data):
    rv = lv.discrete_reduced(stump, stump_data, {1}, np.array([0.0, 1.0]))
    # rows with x1 = 1: two in the left leaf, one in the right
    assert rv.value == pytest.approx((2 * 10 + 1 * 20) / 3)
    assert rv.leaf_weights[(0, 1)] == pytest.approx(2 / 3)
    assert rv.game_value == pytest.approx(rv.value)


def test_discrete_reduced_rejects_continuous(stump, stump_data):
    with pytest.raises(UnsupportedConditioningError, match="quantile_discretize"):
        lv.discrete_reduced(stump, stump_data, {0}, np.zeros(2))


def test_discrete_reduced_no_match(stump):
    X = np.array([[-1.0, 0.0], [1.0, 0.0]])
    meta = (FeatureMeta("x0", "continuous"), FeatureMeta("x1", "indicator"))
    ds = Dataset(X, meta)
    with pytest.raises(UnsupportedConditioningError):
        lv.discrete_reduced(stump, ds, {1}, np.array([0.0, 1.0]))


# ---------------------------------------------------------------------------
# estimator agreement under an exactly factorized law


def test_estimators_agree_on_factorial_grid():
    """On a full factorial design the features are empirically independent,
    so the path-dependent factorization and the leaf projection agree."""
    grid = np.array([[a, b] for a in (0.0, 1.0) for b in (0.0, 1.0)] * 5)
    y = 3.0 * grid[:, 0] - 2.0 * grid[:, 1]
    ens = lv.fit_cart(grid, y, max_depth=2)
    meta = (FeatureMeta("x0", "indicator"), FeatureMeta("x1", "indicator"))
    ds = Dataset(grid, meta)
    for x in np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]):
        for mask in range(4):
            S = {j for j in range(2) if mask >> j & 1}
            a = lv.shap_reduced(ens, S, x).value
            b = lv.leaf_reduced(ens, ds, S, x).value
            c = lv.discrete_reduced(ens, ds, S, x).value
            assert a == pytest.approx(b, abs=1e-12)
            assert a == pytest.approx(c, abs=1e-12)


def test_leaf_reduced_matches_shap_on_its_own_training_partition(rng):
    """With a depth-1 tree the leaf projection and the path factorization
    coincide for any subset (single split feature)."""
    ds = make_continuous_dataset(200, 3, rng)
    y = ds.values[:, 0] + 0.1 * rng.standard_normal(200)
    ens = lv.fit_cart(ds.values, y, max_depth=1)
    x = ds.values[7]
    for mask in range(8):
        S = {j for j in range(3) if mask >> j & 1}
        a = lv.shap_reduced(ens, S, x).value
        b = lv.leaf_reduced(ens, ds, S, x).value
        assert a == pytest.approx(b, abs=1e-12)

"""Ground-truth machinery: Gaussian conditionals, MC estimates, analytic
models and the synthetic generators."""

import math

import numpy as np
import pytest

import leafsv as lv
from leafsv import oracles
from leafsv.data import PlayerPartition
from leafsv.exceptions import ConfigError
from leafsv.oracles import (
    CategoricalMixtureModel,
    GaussianSpec,
    LinearGaussianModel,
    equicorrelation,
    gaussian_conditional,
    mc_reduced,
    piecewise_gate_sv,
    piecewise_gate_value_fn,
    sample_conditional,
)


# ---------------------------------------------------------------------------
# Gaussian conditionals


def test_conditional_bivariate_closed_form():
    # X2 | X1 = x has mean mu2 + rho s2/s1 (x - mu1), var s2^2 (1 - rho^2)
    rho, s1, s2 = 0.6, 2.0, 3.0
    cov = np.array([[s1**2, rho * s1 * s2], [rho * s1 * s2, s2**2]])
    spec = GaussianSpec(np.array([1.0, -2.0]), cov)
    cond = gaussian_conditional(spec, [0], [2.0])
    assert cond.mean[0] == pytest.approx(-2.0 + rho * s2 / s1 * (2.0 - 1.0))
    assert cond.cov[0, 0] == pytest.approx(s2**2 * (1 - rho**2), abs=1e-9)


def test_conditional_independent_is_marginal():
    spec = GaussianSpec(np.zeros(3), np.eye(3))
    cond = gaussian_conditional(spec, [0], [5.0])
    assert cond.mean == pytest.approx(np.zeros(2))
    assert cond.cov == pytest.approx(np.eye(2), abs=1e-9)


def test_conditional_empty_subset_is_identity():
    spec = GaussianSpec(np.zeros(2), equicorrelation(2, 0.5))
    assert gaussian_conditional(spec, [], []) is spec


def test_conditional_singular_needs_flag():
    # the conditioning block has zero variance, so it cannot be inverted
    cov = np.array([[0.0, 0.0], [0.0, 1.0]])
    spec = GaussianSpec(np.array([2.0, -1.0]), cov)
    with pytest.raises(ConfigError, match="pseudo"):
        gaussian_conditional(spec, [0], [2.0])
    cond = gaussian_conditional(spec, [0], [2.0], allow_pseudo=True)
    # a degenerate coordinate carries no information: marginal law returned
    assert cond.mean[0] == pytest.approx(-1.0)
    assert cond.cov[0, 0] == pytest.approx(1.0, abs=1e-9)


def test_equicorrelation_psd_and_shape():
    for rho in (0.0, 0.25, 0.9):
        cov = equicorrelation(6, rho)
        assert np.linalg.eigvalsh(cov).min() >= -1e-12
        assert cov[0, 0] == 1.0 and cov[0, 1] == rho
    with pytest.raises(ConfigError):
        equicorrelation(3, 1.5)


def test_sample_conditional_clamps_and_matches_law():
    spec = GaussianSpec(np.zeros(3), equicorrelation(3, 0.7))
    rng = np.random.default_rng(0)
    draws = sample_conditional(spec, [1], np.array([0.0, 1.5, 0.0]), 40_000, rng)
    assert np.all(draws[:, 1] == 1.5)
    cond = gaussian_conditional(spec, [1], [1.5])
    assert draws[:, 0].mean() == pytest.approx(cond.mean[0], abs=0.02)
    assert draws[:, 0].var() == pytest.approx(cond.cov[0, 0], abs=0.03)


# ---------------------------------------------------------------------------
# Monte-Carlo reduced predictor


def test_mc_reduced_recovers_exact_linear():
    spec = GaussianSpec(np.zeros(4), equicorrelation(4, 0.6))
    model = LinearGaussianModel(np.array([1.0, -2.0, 0.5, 3.0]), spec)
    x = np.array([0.8, -0.3, 1.1, 0.2])
    sampler = lambda S, xx, n, rng: sample_conditional(spec, S, xx, n, rng)
    for S in ([0], [1, 3], [0, 1, 2, 3], []):
        mean, se = mc_reduced(model.predict, sampler, S, x, 50_000, seed=3)
        assert abs(mean - model.exact_reduced(S, x)) <= 4 * max(se, 1e-12)


def test_mc_reduced_error_scales_as_root_n():
    """log-log slope of the standard error vs n_mc is about -1/2."""
    spec = GaussianSpec(np.zeros(3), np.eye(3))
    model = LinearGaussianModel(np.array([1.0, 1.0, 1.0]), spec)
    sampler = lambda S, xx, n, rng: sample_conditional(spec, S, xx, n, rng)
    sizes = [100, 1_000, 10_000, 100_000]
    ses = [
        mc_reduced(model.predict, sampler, [0], np.zeros(3), n, seed=1)[1]
        for n in sizes
    ]
    slope = np.polyfit(np.log10(sizes), np.log10(ses), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_mc_reduced_full_conditioning_zero_error():
    spec = GaussianSpec(np.zeros(2), np.eye(2))
    model = LinearGaussianModel(np.array([2.0, -1.0]), spec)
    sampler = lambda S, xx, n, rng: sample_conditional(spec, S, xx, n, rng)
    x = np.array([1.0, 1.0])
    mean, se = mc_reduced(model.predict, sampler, [0, 1], x, 100, seed=0)
    assert mean == pytest.approx(model.predict(x[None])[0])
    assert se == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# linear-Gaussian model


def test_linear_exact_sv_independent_case():
    spec = GaussianSpec(np.array([1.0, 2.0]), np.diag([4.0, 9.0]))
    model = LinearGaussianModel(np.array([3.0, -1.0]), spec)
    x = np.array([2.0, 0.0])
    rep = lv.brute_force_sv(
        x, PlayerPartition.singletons(2),
        value_fn=lambda cols: model.exact_reduced(cols, x),
    )
    assert rep.phi == pytest.approx(model.exact_sv(x), abs=1e-12)


def test_linear_exact_sv_rejects_correlated():
    spec = GaussianSpec(np.zeros(2), equicorrelation(2, 0.5))
    model = LinearGaussianModel(np.ones(2), spec)
    with pytest.raises(ConfigError):
        model.exact_sv(np.zeros(2))


def test_exact_reduced_endpoints():
    spec = GaussianSpec(np.zeros(3), equicorrelation(3, 0.7))
    model = LinearGaussianModel(np.array([1.0, 2.0, 3.0]), spec)
    x = np.array([0.4, -0.8, 1.2])
    assert model.exact_reduced([], x) == pytest.approx(0.0)  # E f = B . mu
    assert model.exact_reduced([0, 1, 2], x) == pytest.approx(float(x @ model.coeffs))


# ---------------------------------------------------------------------------
# gated piecewise-linear oracle


def test_gate_value_fn_branches():
    a = np.array([1.0, 1.0, 1.0, 1.0])
    x_low = np.array([1.0, 2.0, 3.0, 4.0, -0.5])
    v = piecewise_gate_value_fn(a, x_low)
    # unconditioned gate averages the two branches
    assert v(frozenset({0, 2})) == pytest.approx(0.5 * 1.0 + 0.5 * 3.0)
    # conditioned gate selects the low branch
    assert v(frozenset({0, 2, 4})) == pytest.approx(1.0)
    assert v(frozenset()) == 0.0


def test_gate_closed_form_matches_brute_force():
    a = np.array([1.0, 1.0, 1.0, 1.0])
    x = np.array([1.0, 1.0, 2.0, 1.0, -0.5])
    rep = lv.brute_force_sv(
        x, PlayerPartition.singletons(5), value_fn=piecewise_gate_value_fn(a, x)
    )
    closed = piecewise_gate_sv(a, x)
    assert rep.phi[2] == pytest.approx(closed[2], abs=1e-12)
    assert rep.phi[3] == pytest.approx(closed[3], abs=1e-12)
    assert closed[2] == pytest.approx(0.5)


def test_gate_sv_rejects_high_branch():
    with pytest.raises(ConfigError):
        piecewise_gate_sv(np.ones(4), np.array([0.0, 0.0, 0.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# generators


def test_gen_experiment1_moments():
    ds, y, model = oracles.gen_experiment1(n=30_000, p=5, rho=0.7, seed=1)
    emp = np.corrcoef(ds.values.T)
    assert np.abs(emp - equicorrelation(5, 0.7)).max() < 0.03
    assert y == pytest.approx(ds.values @ model.coeffs)


def test_gen_toy_categorical_layout():
    ds, y, model = oracles.gen_toy_categorical(n=2_000, seed=2)
    assert ds.p == 4
    assert ds.meta[3].kind == "categorical"
    assert set(np.unique(ds.values[:, 3])) == {0.0, 1.0, 2.0}
    assert y == pytest.approx(model.predict_rows(ds.values))


def test_toy_posterior_sums_to_one():
    _, _, model = oracles.gen_toy_categorical(n=100, seed=0)
    x, _ = oracles.TOY_OBSERVATION
    w = model._class_posterior([0, 1], x[[0, 1]], [0, 1, 2])
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w >= 0)


def test_toy_exact_reduced_matches_mc():
    _, _, model = oracles.gen_toy_categorical(n=100, seed=0)
    x, cls = oracles.TOY_OBSERVATION
    exact = model.exact_reduced([0], x)
    # Monte Carlo over the mixture, conditioning by rejection on a coarse slab
    rng = np.random.default_rng(5)
    rows = model.sample_rows(400_000, rng)
    band = np.abs(rows[:, 0] - x[0]) < 0.02
    approx = model.predict_rows(rows[band]).mean()
    se = model.predict_rows(rows[band]).std() / math.sqrt(band.sum())
    assert abs(exact - approx) <= 4 * se + 0.05

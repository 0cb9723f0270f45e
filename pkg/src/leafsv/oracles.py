"""Ground-truth machinery: Gaussian conditionals, Monte-Carlo reduced
predictors, synthetic generators and the analytic piecewise-linear oracle.

Everything here is seeded and pure so experiment scripts are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .data import Dataset, FeatureMeta
from .engine import shapley_kernel
from .exceptions import ConfigError

__all__ = [
    "GaussianSpec",
    "gaussian_conditional",
    "sample_conditional",
    "mc_reduced",
    "LinearGaussianModel",
    "CategoricalMixtureModel",
    "piecewise_gate_value_fn",
    "piecewise_gate_sv",
    "equicorrelation",
    "gen_experiment1",
    "gen_toy_categorical",
    "EXP1_COEFFS",
    "TOY_COVS",
    "TOY_COEFFS",
    "TOY_OBSERVATION",
]


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        p = mean.shape[0]
        if cov.shape != (p, p):
            raise ConfigError(f"covariance shape {cov.shape} does not match p={p}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ConfigError("covariance is not symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig.min() < -1e-10:
            raise ConfigError(f"covariance has negative eigenvalue {eig.min()}")

    @property
    def p(self) -> int:
        return self.mean.shape[0]


def gaussian_conditional(
    spec: GaussianSpec, S: Iterable[int], x_S, allow_pseudo: bool = False
) -> GaussianSpec:
    """Conditional law of the remaining coordinates given X_S = x_S."""
    S = sorted(set(S))
    if not S:
        return spec
    rest = [i for i in range(spec.p) if i not in set(S)]
    x_S = np.asarray(x_S, dtype=float)
    Sss = spec.cov[np.ix_(S, S)]
    Srs = spec.cov[np.ix_(rest, S)]
    Srr = spec.cov[np.ix_(rest, rest)]
    try:
        gain = np.linalg.solve(Sss, Srs.T).T
        shift = np.linalg.solve(Sss, x_S - spec.mean[S])
    except np.linalg.LinAlgError:
        if not allow_pseudo:
            raise ConfigError(
                "conditioning block is singular; pass allow_pseudo=True to use the "
                "pseudo-inverse"
            ) from None
        pinv = np.linalg.pinv(Sss)
        gain = Srs @ pinv
        shift = pinv @ (x_S - spec.mean[S])
    mean = spec.mean[rest] + Srs @ shift
    cov = Srr - gain @ Srs.T
    cov = (cov + cov.T) / 2.0
    cov = cov + 1e-12 * np.eye(len(rest))
    return GaussianSpec(mean, cov)


def sample_conditional(
    spec: GaussianSpec, S: Iterable[int], x, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw full p-dimensional points with X_S clamped to x_S."""
    x = np.asarray(x, dtype=float)
    S = sorted(set(S))
    rest = [i for i in range(spec.p) if i not in set(S)]
    out = np.tile(x, (n, 1))
    if rest:
        cond = gaussian_conditional(spec, S, x[S])
        L = np.linalg.cholesky(cond.cov)
        out[:, rest] = cond.mean + rng.standard_normal((n, len(rest))) @ L.T
    return out


def mc_reduced(
    predict_fn: Callable[[np.ndarray], np.ndarray],
    sampler: Callable[[Iterable[int], np.ndarray, int, np.random.Generator], np.ndarray],
    S: Iterable[int],
    x,
    n_mc: int,
    seed: int | np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo reduced predictor: mean and standard error.

    ``sampler(S, x, n, rng)`` must return n full points with the conditioned
    coordinates clamped; for the Gaussian law use
    ``lambda S, x, n, rng: sample_conditional(spec, S, x, n, rng)``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = sampler(S, np.asarray(x, dtype=float), n_mc, rng)
    vals = np.asarray(predict_fn(draws), dtype=float)
    se = float(vals.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else float("inf")
    return float(vals.mean()), se


@dataclass(frozen=True)
class LinearGaussianModel:
    """f(x) = B.x with Gaussian features; reduced predictors in closed form."""

    coeffs: np.ndarray
    spec: GaussianSpec

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X) @ self.coeffs

    def exact_reduced(self, S: Iterable[int], x) -> float:
        x = np.asarray(x, dtype=float)
        S = sorted(set(S))
        rest = [i for i in range(self.spec.p) if i not in set(S)]
        total = float(self.coeffs[S] @ x[S]) if S else 0.0
        if rest:
            cond = gaussian_conditional(self.spec, S, x[S])
            total += float(self.coeffs[rest] @ cond.mean)
        return total

    def exact_sv(self, x) -> np.ndarray:
        """Analytic SV when features are independent: beta_i (x_i - mu_i)."""
        off = self.spec.cov - np.diag(np.diag(self.spec.cov))
        if not np.allclose(off, 0.0):
            raise ConfigError("closed-form SV requires a diagonal covariance")
        x = np.asarray(x, dtype=float)
        return self.coeffs * (x - self.spec.mean)


@dataclass(frozen=True)
class CategoricalMixtureModel:
    """Gaussian mixture indexed by a categorical class; f(x, z) = B_z . x.

    Layout: continuous coordinates first, the class code last.  Indicator
    columns appended by the encoders are handled through ``allowed_classes``
    masks when conditioning.
    """

    priors: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    covs: np.ndarray  # (K, d, d)
    coeffs: np.ndarray  # (K, d)

    @property
    def n_classes(self) -> int:
        return self.priors.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def predict_rows(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        z = X[:, self.d].astype(int)
        return np.einsum("ij,ij->i", X[:, : self.d], self.coeffs[z])

    def _class_posterior(
        self, S_cont: Sequence[int], x_cont: np.ndarray, allowed: Sequence[int]
    ) -> np.ndarray:
        logw = np.full(self.n_classes, -np.inf)
        for z in allowed:
            lw = math.log(self.priors[z])
            if S_cont:
                sub = np.ix_(S_cont, S_cont)
                cov = self.covs[z][sub]
                diff = x_cont - self.means[z][list(S_cont)]
                sign, logdet = np.linalg.slogdet(cov)
                lw += -0.5 * (diff @ np.linalg.solve(cov, diff) + logdet)
            logw[z] = lw
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def exact_reduced(
        self, S_cont: Iterable[int], x_cont_full, allowed: Sequence[int] | None = None
    ) -> float:
        """E[B_Z . X | X_S = x_S, Z in allowed] in closed form."""
        S_cont = sorted(set(S_cont))
        x_full = np.asarray(x_cont_full, dtype=float)
        allowed = list(range(self.n_classes)) if allowed is None else list(allowed)
        w = self._class_posterior(S_cont, x_full[S_cont], allowed)
        total = 0.0
        for z in allowed:
            spec = GaussianSpec(self.means[z], self.covs[z])
            cond_mean = np.array(x_full, copy=True)
            rest = [i for i in range(self.d) if i not in set(S_cont)]
            if rest:
                cond = gaussian_conditional(spec, S_cont, x_full[S_cont])
                cond_mean[rest] = cond.mean
            total += w[z] * float(self.coeffs[z] @ cond_mean)
        return total

    def sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.choice(self.n_classes, size=n, p=self.priors)
        out = np.empty((n, self.d + 1))
        for k in range(self.n_classes):
            mask = z == k
            m = int(mask.sum())
            if m:
                L = np.linalg.cholesky(self.covs[k])
                out[mask, : self.d] = self.means[k] + rng.standard_normal((m, self.d)) @ L.T
        out[:, self.d] = z
        return out


# ---------------------------------------------------------------------------
# analytic oracle for the gated piecewise-linear model


def _gate_reduced(a: np.ndarray, x: np.ndarray, S: frozenset, gate: int, p: int) -> float:
    """Exact reduced predictor of
    f = (a1 x1 + a2 x2) [x_gate <= 0] + (a3 x3 + a4 x4) [x_gate > 0]
    under independent standard-normal features."""
    low = a[0] * (x[0] if 0 in S else 0.0) + a[1] * (x[1] if 1 in S else 0.0)
    high = a[2] * (x[2] if 2 in S else 0.0) + a[3] * (x[3] if 3 in S else 0.0)
    if gate in S:
        return low if x[gate] <= 0 else high
    return 0.5 * low + 0.5 * high


def piecewise_gate_value_fn(a, x, p: int = 5, gate: int = 4) -> Callable[[frozenset], float]:
    """Value function v(S) for the gated model, exact for every subset."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape[0] != p:
        raise ConfigError(f"x must have {p} coordinates")
    return lambda S: _gate_reduced(a, x, frozenset(S), gate, p)


def piecewise_gate_sv(a, x, p: int = 5, gate: int = 4) -> dict[int, float]:
    """Closed-form attributions of the off-branch players (features 3 and 4,
    zero-based 2 and 3) when the gate routes the point to the low branch.

    phi_i = K a_i x_i with K = (1/p) P(X_gate > 0) sum over subsets not
    containing i or the gate of 1/binom(p-1, |S|).
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if x[gate] > 0:
        raise ConfigError(
            "gate coordinate is positive; the branch roles swap, mirror the "
            "query instead"
        )
    K = 0.5 / p * sum(
        math.comb(p - 2, s) / math.comb(p - 1, s) for s in range(p - 1)
    )
    return {i: K * a[i] * x[i] for i in (2, 3)}


# ---------------------------------------------------------------------------
# synthetic data generators


def equicorrelation(p: int, rho: float) -> np.ndarray:
    """Unit-diagonal covariance with constant off-diagonal correlation.

    The all-ones construction with diagonal 2*rho - 1 is not positive
    semi-definite for rho < 1/2; this is the standard PSD variant."""
    if not 0 <= rho < 1:
        raise ConfigError("rho must be in [0, 1)")
    return (1 - rho) * np.eye(p) + rho * np.ones((p, p))


EXP1_COEFFS = np.array([6.49, -2.44, -2.11, -4.29, 3.46])


def gen_experiment1(
    n: int = 10_000,
    p: int = 5,
    rho: float = 0.7,
    coeffs=None,
    seed: int = 0,
) -> tuple[Dataset, np.ndarray, LinearGaussianModel]:
    """Correlated linear-regression data: X ~ N(0, equicorrelation), y = B.X."""
    coeffs = EXP1_COEFFS[:p] if coeffs is None else np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != p:
        raise ConfigError("coefficient vector length must equal p")
    spec = GaussianSpec(np.zeros(p), equicorrelation(p, rho))
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(spec.cov)
    X = rng.standard_normal((n, p)) @ L.T
    y = X @ coeffs
    meta = tuple(FeatureMeta(f"x{j}", "continuous") for j in range(p))
    return Dataset(X, meta), y, LinearGaussianModel(coeffs, spec)


TOY_COVS = {
    "a": np.array(
        [
            [0.41871254, -0.79006136, 0.46956991],
            [-0.79006136, 1.90865098, -0.82571655],
            [0.46956991, -0.82571655, 0.95835472],
        ]
    ),
    "b": np.array(
        [
            [0.55326081, 0.11811951, -0.70677924],
            [0.11811951, 2.73312979, -2.94400196],
            [-0.70677924, -2.94400196, 4.22105088],
        ]
    ),
    "c": np.array(
        [
            [9.2859966, 1.12872646, 2.4224434],
            [1.12872646, 0.92891237, -0.14373393],
            [2.4224434, -0.14373393, 1.81601676],
        ]
    ),
}

TOY_COEFFS = {
    "a": np.array([1.0, 3.0, 5.0]),
    "b": np.array([-5.0, -10.0, -8.0]),
    "c": np.array([6.0, 1.0, 0.0]),
}

# named query used throughout the categorical-encoding comparisons
TOY_OBSERVATION = (np.array([0.35, -1.61, -0.11]), "a")


def gen_toy_categorical(
    n: int = 10_000, seed: int = 0
) -> tuple[Dataset, np.ndarray, CategoricalMixtureModel]:
    """Three correlated continuous features plus a 3-class label; the target
    is linear with class-specific coefficients."""
    classes = ("a", "b", "c")
    model = CategoricalMixtureModel(
        priors=np.full(3, 1.0 / 3.0),
        means=np.zeros((3, 3)),
        covs=np.stack([TOY_COVS[c] for c in classes]),
        coeffs=np.stack([TOY_COEFFS[c] for c in classes]),
    )
    rng = np.random.default_rng(seed)
    rows = model.sample_rows(n, rng)
    y = model.predict_rows(rows)
    meta = (
        FeatureMeta("x1", "continuous"),
        FeatureMeta("x2", "continuous"),
        FeatureMeta("x3", "continuous"),
        FeatureMeta("z", "categorical", categories=classes),
    )
    return Dataset(rows, meta), y, model

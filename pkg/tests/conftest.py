import numpy as np
import pytest

import leafsv as lv
from leafsv.data import Dataset, FeatureMeta, PlayerPartition


@pytest.fixture(scope="session")
def demo():
    return lv.demo_model()


@pytest.fixture(scope="session")
def demo_query():
    return np.array([2.0, 3.0, 0.5, -1.0])


def make_continuous_dataset(n, p, rng):
    X = rng.standard_normal((n, p))
    meta = tuple(FeatureMeta(f"x{j}", "continuous") for j in range(p))
    return Dataset(X, meta)


def make_fitted(rng, n=120, p=4, depth=3):
    """Random CART + matching reference dataset + singleton partition."""
    ds = make_continuous_dataset(n, p, rng)
    y = ds.values @ rng.standard_normal(p) + 0.3 * rng.standard_normal(n)
    ens = lv.fit_cart(ds.values, y, max_depth=depth)
    return ens, ds, PlayerPartition.singletons(p)


@pytest.fixture
def rng():
    return np.random.default_rng(0)

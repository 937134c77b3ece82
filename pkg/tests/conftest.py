import numpy as np
import pytest

from quantgen import Dataset, family, fit_hermite, gen_synthetic

X_STAR = (4.0, -1.0, 3.0)


def make_regression_instance(seed: int, n: int, p: int) -> Dataset:
    """Random full-rank instance with intercept and continuous noise."""
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n)] + [rng.normal(size=n) for _ in range(p - 1)])
    beta = rng.normal(size=p)
    y = X @ beta + rng.standard_normal(n)
    return Dataset(X, y)


@pytest.fixture(scope="session")
def normal_data_10k() -> Dataset:
    return gen_synthetic(family("normal"), 10_000, seed=42)


@pytest.fixture(scope="session")
def normal_model_10k(normal_data_10k):
    return fit_hermite(normal_data_10k, m=100)


@pytest.fixture(scope="session")
def small_model():
    data = gen_synthetic(family("normal"), 2_000, seed=11)
    return fit_hermite(data, m=30)

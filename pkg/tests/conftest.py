import numpy as np
import pytest

from regcheck.model import Dataset, fit_least_squares, make_linear_model
from regcheck.sim import Dgp, generate


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def linear_null_fit(n: int, p: int, seed: int):
    """Convenience: draw a linear-null dataset and fit the null family."""
    data = generate(Dgp(family="linear_null", a=0.0, n=n, p=p), np.random.default_rng(seed))
    spec = make_linear_model(p)
    return data, spec, fit_least_squares(data, spec)


def dataset_from(X, y) -> Dataset:
    return Dataset(np.asarray(X, dtype=float), np.asarray(y, dtype=float))

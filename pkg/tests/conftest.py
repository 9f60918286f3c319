import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_simplex(rng, n, n_zero=0):
    """Random point on the simplex, optionally with forced zero bins."""
    w = rng.random(n) + 1e-3
    if n_zero:
        idx = rng.choice(n, size=n_zero, replace=False)
        w[idx] = 0.0
    return w / w.sum()

import numpy as np
import pytest

from fairlin import BaseLinearModel, GroupStats


def random_cov(rng, d, diagonal=False):
    if diagonal:
        return np.diag(rng.uniform(0.2, 3.0, size=d))
    A = rng.standard_normal((d, d))
    return A @ A.T / d + 0.1 * np.eye(d)


def random_instance(rng, d=None, M=None, diagonal=False, gamma=True):
    d = d or int(rng.integers(1, 9))
    M = M or int(rng.integers(2, 5))
    p = rng.dirichlet(np.ones(M) * 2.0)
    mu = rng.normal(0, 2, size=(M, d))
    sigma = np.stack([random_cov(rng, d, diagonal) for _ in range(M)])
    model = BaseLinearModel(rng.normal(size=d), float(rng.normal()) if gamma else 0.0,
                            float(rng.normal()))
    return model, GroupStats.from_moments(p, mu, sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

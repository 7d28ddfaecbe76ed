from pathlib import Path

import numpy as np
import pytest

from tannin.data import DEFAULT_DATA, Dataset, load_dataset

RED_WINE = DEFAULT_DATA


@pytest.fixture(scope="session")
def red_wine() -> Dataset:
    if not Path(RED_WINE).is_file():
        pytest.skip(f"red-wine CSV not found at {RED_WINE}")
    return load_dataset(RED_WINE)


def separable_task(n=80, d=11, seed=0):
    """Two classes split by a random hyperplane with a clear margin; labels 5 and 6."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    X = rng.normal(size=(n, d))
    X += np.outer(np.where(X @ w >= 0, 1.0, -1.0), w)  # push points away from the plane
    y = np.where(X @ w >= 0, 6, 5)
    return X, y


@pytest.fixture
def separable():
    return separable_task()


def _random_abs_corr(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3 * d, d)) @ np.diag(rng.uniform(0.2, 3, d))
    A[:, 1:] += rng.uniform(0, 1.5) * A[:, :-1]  # induce neighbour structure
    c = np.corrcoef(A.T)
    return c


def _uniform_abs_corr(d, seed):
    u = np.triu(np.random.default_rng(seed + 10**6).uniform(0, 1, (d, d)), 1)
    return u + u.T + np.eye(d)


def ordering_fixtures(per_d=100):
    """Synthetic matrices for d = 2..6: data-derived correlations and raw uniform |rho| tables."""
    for d in range(2, 7):
        for seed in range(per_d):
            yield f"data-d{d}-s{seed}", _random_abs_corr(d, seed)
            yield f"uniform-d{d}-s{seed}", _uniform_abs_corr(d, seed)

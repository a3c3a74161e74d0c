import numpy as np
import pytest

from dtekit.core import ExperimentData, LocationGrid


@pytest.fixture
def two_arm_data():
    rng = np.random.default_rng(42)
    n = 80
    x = rng.random((n, 3))
    arms = rng.integers(1, 3, size=n)
    y = x.sum(axis=1) + 0.5 * (arms == 2) + 0.3 * rng.standard_normal(n)
    return ExperimentData(covariates=x, arms=arms, outcomes=y, n_arms=2)


def make_experiment(seed=0, n=60, n_arms=2, d=3, shift=0.5, noise=0.3):
    rng = np.random.default_rng(seed)
    x = rng.random((n, d))
    arms = 1 + rng.integers(0, n_arms, size=n)
    y = x.sum(axis=1) + shift * (arms - 1) + noise * rng.standard_normal(n)
    return ExperimentData(covariates=x, arms=arms, outcomes=y, n_arms=n_arms)


def grid_of(*locations):
    return LocationGrid(locations=np.asarray(locations, dtype=float))

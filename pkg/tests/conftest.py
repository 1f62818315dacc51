import pytest

from povbench.dataset import GeneratorConfig, synthesize


@pytest.fixture(scope="session")
def ds7062():
    return synthesize(GeneratorConfig(n=7062, seed=1))


@pytest.fixture(scope="session")
def ds_small():
    return synthesize(GeneratorConfig(n=800, seed=11))


@pytest.fixture(scope="session")
def noiseless_ds():
    return synthesize(GeneratorConfig(n=600, seed=5, noise_sd=0.0))


def random_regression_fixture(rng, n=200, p=8, noise=0.5):
    """Well-conditioned random design + linear response."""
    X = rng.normal(size=(n, p))
    beta = rng.normal(size=p)
    y = X @ beta + rng.normal(scale=noise, size=n) + 1.0
    return X, y

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from css2d.spectral import Grid

settings.register_profile(
    "suite", max_examples=15, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def grid16():
    return Grid(16, 20.0)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32, 20.0)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64, 20.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

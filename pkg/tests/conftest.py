import numpy as np
import pytest

from pulse_cns import Grid
from pulse_cns.acceptance import FixtureCache


@pytest.fixture
def grid16():
    return Grid(16, 1.0)


@pytest.fixture
def grid32():
    return Grid(32, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_cache():
    """Shared expensive fixtures (reference 64^3 runs) for the acceptance suite."""
    return FixtureCache(n=64)

import numpy as np
import pytest

from patternstat.permutations.permutation import Permutation


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def example_permutation():
    """The running example 541362."""
    return Permutation.parse("541362")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

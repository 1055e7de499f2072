"""
Pytest configuration / setup
"""
import os

import numpy as np
import pytest

# If placed below the package imports, it would have no effect:
# 'TESTING' has already been read from the environment (due to settings module).
os.environ["TESTING"] = "True"
os.environ.setdefault("LOG_LEVEL", "WARNING")
# pylint: disable=wrong-import-position
from welfare_order.models.regimes import Horizon, WelfareSpec
from welfare_order.schemas.simulate import PRESETS
from welfare_order.utils.matrices import build_problem
from welfare_order.utils.simulate import exact_distribution, true_q
from welfare_order.utils.statespace import build_layout

TEST_DRAWS = 100_000
TEST_SEED = 7


@pytest.fixture(scope="session")
def layout_t1():
    """
    Single period, instrumented, 16 latent states.
    """
    return build_layout(Horizon(periods=1), markov=False)


@pytest.fixture(scope="session")
def matrices_t1(layout_t1):
    return build_problem(layout_t1, WelfareSpec.terminal(1))


@pytest.fixture(scope="session")
def layout_t2():
    """
    Two periods, both instrumented, Markov layout with 2^16 latent states.
    """
    return build_layout(Horizon(periods=2), markov=True)


@pytest.fixture(scope="session")
def matrices_t2(layout_t2):
    return build_problem(layout_t2, WelfareSpec.terminal(2))


@pytest.fixture(scope="session")
def positive_q(layout_t2):
    """
    Monte Carlo latent distribution of the "positive" preset.
    """
    return true_q(PRESETS["positive"], layout_t2, n_draws=TEST_DRAWS, seed=TEST_SEED)


@pytest.fixture(scope="session")
def positive_distribution(layout_t2, positive_q):
    return exact_distribution(PRESETS["positive"], layout_t2, q=positive_q)


@pytest.fixture
def rng():
    return np.random.default_rng(20221001)

"""
Tests for the threshold data-generating process
"""
import numpy as np
import pytest
from pydantic import ValidationError

from welfare_order.errors import InvalidInputError
from welfare_order.models.regimes import Horizon, WelfareSpec
from welfare_order.schemas.assumptions import parse_assumptions
from welfare_order.schemas.simulate import PRESETS, DGPConfig
from welfare_order.tests.conftest import TEST_DRAWS, TEST_SEED
from welfare_order.utils.assumptions import build_mask
from welfare_order.utils.dataset import estimate_p
from welfare_order.utils.matrices import build_problem
from welfare_order.utils.simulate import (
    dgp_horizon,
    exact_p,
    sample_data,
    sample_from_q,
    true_q,
    z_weights,
)
from welfare_order.utils.statespace import build_layout


def test_true_q_is_distribution(positive_q, layout_t2):
    """test_true_q_is_distribution
    Monte Carlo frequencies form a distribution over the latent states
    """
    assert positive_q.shape == (layout_t2.d_q,)
    assert positive_q.min() >= 0.0
    assert positive_q.sum() == pytest.approx(1.0)


def test_true_q_reproducible(layout_t2, positive_q):
    """test_true_q_reproducible
    The same seed gives the same latent distribution
    """
    again = true_q(PRESETS["positive"], layout_t2, n_draws=TEST_DRAWS, seed=TEST_SEED)
    assert np.array_equal(again, positive_q)


def test_true_q_layout_checks(layout_t1, layout_t2):
    """test_true_q_layout_checks
    The process needs a two-period layout with matching instruments
    """
    with pytest.raises(InvalidInputError):
        true_q(PRESETS["positive"], layout_t1, n_draws=10)
    with pytest.raises(InvalidInputError):
        true_q(PRESETS["no-z2"], layout_t2, n_draws=10)


def test_positive_preset_respects_monotonicity(layout_t2, positive_q):
    """test_positive_preset_respects_monotonicity
    With positive coefficients all mass sits on monotone response types
    """
    mask = build_mask(layout_t2, parse_assumptions("M1=up,M2=up,K"))
    assert positive_q[~mask.h].sum() == 0.0
    matrices = build_problem(layout_t2, WelfareSpec.terminal(2), mask=mask)
    p = exact_p(PRESETS["positive"], layout_t2, matrices, q=positive_q)
    assert p.shape == (60,)


def test_negative_effect_violates_upward_monotonicity(layout_t2):
    """test_negative_effect_violates_upward_monotonicity
    A harmful second treatment puts mass outside the M2-up mask
    """
    q = true_q(PRESETS["neg-mu22"], layout_t2, n_draws=20_000, seed=TEST_SEED)
    mask = build_mask(layout_t2, parse_assumptions("M1=up,M2=up,K"))
    matrices = build_problem(layout_t2, WelfareSpec.terminal(2), mask=mask)
    with pytest.raises(InvalidInputError):
        exact_p(PRESETS["neg-mu22"], layout_t2, matrices, q=q)


def test_z_weights():
    """test_z_weights
    Instrument values are weighted by their Bernoulli probabilities
    """
    config = DGPConfig(z1_prob=0.25, z2_prob=0.5)
    assert np.allclose(z_weights(config, dgp_horizon(config)), [0.375, 0.375, 0.125, 0.125])
    no_z2 = PRESETS["no-z2"]
    assert dgp_horizon(no_z2) == Horizon(periods=2, instrumented=(True, False))
    assert np.allclose(z_weights(no_z2, dgp_horizon(no_z2)), [0.5, 0.5])


def test_sample_data():
    """test_sample_data
    Samples carry binary columns in file order and the requested seed
    """
    sample = sample_data(PRESETS["positive"], 500, seed=11)
    assert list(sample.frame.columns) == ["y1", "d1", "z1", "y2", "d2", "z2"]
    assert sample.n == 500
    assert sample.seed == 11
    assert set(np.unique(sample.frame.to_numpy())) <= {0, 1}
    assert sample_data(PRESETS["positive"], 500, seed=11).frame.equals(sample.frame)
    assert sample_data(PRESETS["positive"], 0).n == 0
    with pytest.raises(InvalidInputError):
        sample_data(PRESETS["positive"], -1)


def test_sample_without_second_instrument():
    """test_sample_without_second_instrument
    z2 is identically zero when the preset has no second instrument
    """
    sample = sample_data(PRESETS["no-z2"], 200, seed=5)
    assert sample.frame["z2"].eq(0).all()
    assert sample.horizon.instrumented == (True, False)


def test_sample_frequencies_approach_exact(positive_distribution):
    """test_sample_frequencies_approach_exact
    Large samples estimate the exact cell probabilities
    """
    estimated = estimate_p(sample_data(PRESETS["positive"], 200_000, seed=3))
    assert np.abs(estimated.probabilities - positive_distribution.probabilities).max() < 0.02


def test_sample_from_q(layout_t1):
    """test_sample_from_q
    A point mass on a complier reproduces d = z and y = d
    """
    q = np.zeros(layout_t1.d_q)
    q[5] = 1.0
    sample = sample_from_q(q, layout_t1, 100, seed=2)
    frame = sample.frame
    assert frame["d1"].equals(frame["z1"])
    assert frame["y1"].equals(frame["d1"])


def test_dgp_validation():
    """test_dgp_validation
    Scales must be positive and instrument probabilities interior
    """
    with pytest.raises(ValidationError):
        DGPConfig(sd_v=0.0)
    with pytest.raises(ValidationError):
        DGPConfig(z1_prob=1.0)


def test_no_z2_layout():
    """test_no_z2_layout
    The process without a second instrument runs on the reduced layout
    """
    config = PRESETS["no-z2"]
    layout = build_layout(dgp_horizon(config), markov=True)
    q = true_q(config, layout, n_draws=5_000, seed=1)
    assert q.shape == (4096,)
    assert q.sum() == pytest.approx(1.0)

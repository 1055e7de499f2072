"""
Tests for regime enumeration, outcome paths and welfare oracles
"""
from itertools import product

import numpy as np
import pytest

from welfare_order.errors import AmbiguityError, DimensionError, InvalidInputError
from welfare_order.models.regimes import (
    Adaptivity,
    Horizon,
    Regime,
    StochasticRegime,
    WelfareSpec,
)
from welfare_order.models.statespace import ResponseMaps
from welfare_order.utils.regimes import (
    backward_induction_oracle,
    enumerate_regimes,
    evaluate_outcome_path,
    index_from_regime,
    is_static,
    optimal_regime_oracle,
    regime_count,
    regime_from_index,
    regime_welfares,
    stochastic_welfare,
    welfare_from_q,
)
from welfare_order.utils.statespace import build_layout, encode, field_values


def test_regime_counts():
    """test_regime_counts
    |K| = 2^(number of table entries) for each horizon and adaptivity
    """
    assert regime_count(Horizon(periods=1)) == 2
    assert regime_count(Horizon(periods=2)) == 8
    assert regime_count(Horizon(periods=3)) == 128
    assert regime_count(Horizon(periods=3, adaptivity=Adaptivity.LAG1)) == 32
    assert len(enumerate_regimes(Horizon(periods=2))) == 8


def test_regime_index_bits():
    """test_regime_index_bits
    Bit i of k-1 is flat entry i; T=2 tables read (d1, d2(y1=1), d2(y1=0))
    """
    regime = regime_from_index(6, Horizon(periods=2))
    assert regime.tables == ((1,), (0, 1))
    assert regime.flat == (1, 0, 1)
    assert regime.label == "Regime 6: (1,0,1)"
    assert regime.allocation(1, ()) == 1
    assert regime.allocation(2, (1,)) == 0
    assert regime.allocation(2, (0,)) == 1
    assert index_from_regime(regime) == 6


def test_regime_index_out_of_range():
    """test_regime_index_out_of_range
    Indices outside 1..|K| are rejected
    """
    with pytest.raises(InvalidInputError):
        regime_from_index(0, Horizon(periods=2))
    with pytest.raises(InvalidInputError):
        regime_from_index(9, Horizon(periods=2))


def test_static_regimes():
    """test_static_regimes
    At T=2 the static regimes are 1, 2, 7 and 8
    """
    regimes = enumerate_regimes(Horizon(periods=2))
    static = [regime.index for regime in regimes if is_static(regime)]
    assert static == [1, 2, 7, 8]


def test_regime_cap():
    """test_regime_cap
    Enumeration above the cap raises a dimension error
    """
    with pytest.raises(DimensionError):
        enumerate_regimes(Horizon(periods=3), cap=64)


def test_invalid_tables():
    """test_invalid_tables
    Tables must have one 0/1 entry per history key
    """
    with pytest.raises(InvalidInputError):
        Regime(index=1, tables=((1,), (0,)))
    with pytest.raises(InvalidInputError):
        Regime(index=1, tables=((2,),))
    with pytest.raises(InvalidInputError):
        StochasticRegime(tables=((1.5,),))


def test_outcome_path(layout_t1):
    """test_outcome_path
    Treated units with Y(0)=0, Y(1)=1 reach y=1 only under treatment
    """
    maps = ResponseMaps(layout=layout_t1, values={"Y1": (0, 1), "D1": (0, 1)})
    treat = regime_from_index(2, Horizon(periods=1))
    control = regime_from_index(1, Horizon(periods=1))
    assert evaluate_outcome_path(treat, maps).y == (1,)
    assert evaluate_outcome_path(treat, maps).d == (1,)
    assert evaluate_outcome_path(control, maps).y == (0,)


def test_welfare_point_mass(layout_t1):
    """test_welfare_point_mass
    A point mass on one response type has welfare equal to its outcome
    """
    maps = ResponseMaps(layout=layout_t1, values={"Y1": (0, 1), "D1": (0, 1)})
    q = np.zeros(layout_t1.d_q)
    q[encode(maps, layout_t1)] = 1.0
    terminal = WelfareSpec.terminal(1)
    assert welfare_from_q(2, q, terminal, layout_t1) == 1.0
    assert welfare_from_q(1, q, terminal, layout_t1) == 0.0
    assert optimal_regime_oracle(q, terminal, layout_t1) == 2


def test_oracle_ties(layout_t1):
    """test_oracle_ties
    Outcomes that ignore treatment tie every regime
    """
    maps = ResponseMaps(layout=layout_t1, values={"Y1": (1, 1), "D1": (0, 1)})
    q = np.zeros(layout_t1.d_q)
    q[encode(maps, layout_t1)] = 1.0
    with pytest.raises(AmbiguityError) as error:
        optimal_regime_oracle(q, WelfareSpec.terminal(1), layout_t1)
    assert error.value.tied == (1, 2)


def test_welfare_rejects_non_distribution(layout_t1):
    """test_welfare_rejects_non_distribution
    q must lie on the simplex
    """
    with pytest.raises(InvalidInputError):
        welfare_from_q(1, np.ones(layout_t1.d_q), WelfareSpec.terminal(1), layout_t1)


def test_welfares_match_welfare_rows(layout_t2, matrices_t2, rng):
    """test_welfares_match_welfare_rows
    Enumerated welfares equal A q
    """
    q = rng.dirichlet(np.ones(layout_t2.d_q))
    welfares = regime_welfares(q, WelfareSpec.terminal(2), layout_t2)
    assert np.allclose(welfares, matrices_t2.A.dot(q), atol=1e-12)


def test_backward_induction_matches_enumeration(layout_t2, rng):
    """test_backward_induction_matches_enumeration
    Backward induction finds the same optimal regime as enumeration
    """
    terminal = WelfareSpec.terminal(2)
    for _ in range(100):
        q = rng.dirichlet(np.ones(layout_t2.d_q))
        assert backward_induction_oracle(q, layout_t2) == optimal_regime_oracle(
            q, terminal, layout_t2
        )


def test_backward_induction_needs_full_adaptivity():
    """test_backward_induction_needs_full_adaptivity
    lag1 regimes are rejected
    """
    layout = build_layout(Horizon(periods=2, adaptivity=Adaptivity.LAG1), markov=True)
    q = np.full(layout.d_q, 1.0 / layout.d_q)
    with pytest.raises(InvalidInputError):
        backward_induction_oracle(q, layout)


def test_backward_induction_zero_probability_branch(layout_t2, rng):
    """test_backward_induction_zero_probability_branch
    With Pr[Y1(1) = 1] = 0 some histories are never reached; the induced regime
    still attains the maximal welfare
    """
    terminal = WelfareSpec.terminal(2)
    y_field = layout_t2.y_field(1)
    states = np.arange(layout_t2.d_q)
    treated_success = field_values(states, y_field, y_field.grid_index({"d1": 1})) == 1
    for _ in range(10):
        q = rng.dirichlet(np.ones(layout_t2.d_q))
        q[treated_success] = 0.0
        q /= q.sum()
        welfares = regime_welfares(q, terminal, layout_t2)
        best = backward_induction_oracle(q, layout_t2)
        assert welfares[best - 1] == pytest.approx(welfares.max(), abs=1e-12)


def test_stochastic_regimes_do_not_beat_deterministic(layout_t2, rng):
    """test_stochastic_regimes_do_not_beat_deterministic
    Randomized rules on a 0.25 grid never exceed the best deterministic regime
    """
    terminal = WelfareSpec.terminal(2)
    grid = (0.0, 0.25, 0.5, 0.75, 1.0)
    for _ in range(50):
        q = rng.dirichlet(np.ones(layout_t2.d_q))
        best = regime_welfares(q, terminal, layout_t2).max()
        for first, high, low in product(grid, repeat=3):
            regime = StochasticRegime(tables=((first,), (high, low)))
            assert stochastic_welfare(regime, q, layout_t2, terminal) <= best + 1e-9


def test_stochastic_matches_deterministic(layout_t2, rng):
    """test_stochastic_matches_deterministic
    A degenerate randomized regime has the welfare of its deterministic twin
    """
    q = rng.dirichlet(np.ones(layout_t2.d_q))
    terminal = WelfareSpec.terminal(2)
    regime = regime_from_index(5, Horizon(periods=2))
    value = stochastic_welfare(StochasticRegime.from_regime(regime), q, layout_t2, terminal)
    assert value == pytest.approx(welfare_from_q(5, q, terminal, layout_t2), abs=1e-12)

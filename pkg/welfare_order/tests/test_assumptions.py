"""
Tests for identifying assumptions: parsing, direction detection and masks
"""
import numpy as np
import pytest

from welfare_order.errors import InvalidInputError
from welfare_order.models.assumptions import CellKey, Direction, MaskRelation, MaskVector
from welfare_order.models.regimes import Horizon
from welfare_order.schemas.assumptions import AssumptionConfig, parse_assumptions
from welfare_order.utils.assumptions import (
    build_mask,
    cell_directions,
    compare_masks,
    detect_direction,
    resolve_directions,
)
from welfare_order.utils.dataset import distribution_from_q
from welfare_order.utils.statespace import build_layout, decode


def test_parse_assumptions():
    """test_parse_assumptions
    Names, directions and the Markov flag
    """
    config = parse_assumptions("M1,M2,L-short,K")
    assert config.treatment_monotone is Direction.AUTO
    assert config.outcome_monotone is Direction.AUTO
    assert config.markov
    assert config.labels == ["M1=auto", "M2=auto", "L-short", "K"]
    assert parse_assumptions(["M1=down"]).treatment_monotone is Direction.DOWN
    assert parse_assumptions("none").labels == []
    assert parse_assumptions(None).labels == []


@pytest.mark.parametrize("text", ["M2", "X9", "M1=sideways", "K=up"])
def test_parse_rejects(text):
    """test_parse_rejects
    Unknown names, unknown directions and M2 without M1
    """
    with pytest.raises(InvalidInputError):
        parse_assumptions(text)


def test_mask_counts_single_period(layout_t1):
    """test_mask_counts_single_period
    Treatment monotonicity removes defiers (12 of 16 types), outcome
    monotonicity also removes harmed types (9 of 16)
    """
    treatment = build_mask(layout_t1, parse_assumptions("M1=up"))
    both = build_mask(layout_t1, parse_assumptions("M1=up,M2=up"))
    assert treatment.active_count == 12
    assert both.active_count == 9
    for state in treatment.active_states:
        assert decode(state, layout_t1).values["D1"] != (1, 0)
    for state in both.active_states:
        assert decode(state, layout_t1).values["Y1"] != (1, 0)


def test_compare_masks(layout_t1):
    """test_compare_masks
    Adding restrictions shrinks the active set
    """
    full = MaskVector.full(layout_t1.d_q)
    up = build_mask(layout_t1, parse_assumptions("M1=up"))
    down = build_mask(layout_t1, parse_assumptions("M1=down"))
    both = build_mask(layout_t1, parse_assumptions("M1=up,M2=up"))
    assert compare_masks(full, up) is MaskRelation.SUPERSET
    assert compare_masks(both, up) is MaskRelation.SUBSET
    assert compare_masks(up, down) is MaskRelation.INCOMPARABLE
    assert compare_masks(up, up) is MaskRelation.EQUAL


def test_learning_masks(layout_t2):
    """test_learning_masks
    Short memory allows 6 and long memory 7 second-period treatment rules per
    value of z2, out of 16
    """
    short = build_mask(layout_t2, parse_assumptions("L-short,K"))
    long_memory = build_mask(layout_t2, parse_assumptions("L-long,K"))
    assert short.active_count == 65536 * 36 // 256
    assert long_memory.active_count == 65536 * 49 // 256
    assert compare_masks(short, long_memory) is MaskRelation.INCOMPARABLE


def test_learning_needs_two_periods(layout_t1):
    """test_learning_needs_two_periods
    Learning monotonicity is rejected for T=1
    """
    with pytest.raises(InvalidInputError):
        build_mask(layout_t1, parse_assumptions("L"))


def test_second_period_cells(layout_t2):
    """test_second_period_cells
    D2 directions are set per (y1, d1) cell
    """
    directions = cell_directions(parse_assumptions("M1=up"), layout_t2)
    keys = sorted(str(key) for key in directions if key.kind == "D")
    assert keys[0] == "D1[]"
    assert "D2[y1=1,d1=0]" in keys
    assert len(keys) == 5
    assert directions[CellKey.parse("Y1[]")] is Direction.OFF
    mask = build_mask(layout_t2, parse_assumptions("M1=up"))
    assert mask.active_count == 65536 * 3 * 81 // (4 * 256)


def test_cell_override(layout_t2):
    """test_cell_override
    A single cell can switch direction
    """
    config = AssumptionConfig(
        treatment_monotone=Direction.UP,
        treatment_cells={"D2[y1=0,d1=0]": Direction.OFF},
    )
    directions = cell_directions(config, layout_t2)
    assert directions[CellKey.parse("D2[y1=0,d1=0]")] is Direction.OFF
    assert build_mask(layout_t2, config).active_count == 65536 * 3 * 27 // (4 * 64)
    with pytest.raises(InvalidInputError):
        cell_directions(
            AssumptionConfig(
                treatment_monotone=Direction.UP, treatment_cells={"D7[]": Direction.OFF}
            ),
            layout_t2,
        )


def test_auto_needs_data(layout_t1):
    """test_auto_needs_data
    An auto direction cannot be used without a distribution
    """
    with pytest.raises(InvalidInputError):
        resolve_directions(parse_assumptions("M1"), layout_t1)
    with pytest.raises(InvalidInputError):
        build_mask(layout_t1, parse_assumptions("M1"))


def test_detect_direction(layout_t1):
    """test_detect_direction
    Compliers only: the first stage is positive; defiers only: negative
    """
    compliers = np.zeros(layout_t1.d_q)
    compliers[5] = 1.0
    distribution = distribution_from_q(compliers, layout_t1)
    assert detect_direction(distribution, 1, {}, "D") is Direction.UP
    assert detect_direction(distribution, 1, {}, "Y") is Direction.UP
    defiers = np.zeros(layout_t1.d_q)
    defiers[6] = 1.0
    distribution = distribution_from_q(defiers, layout_t1)
    assert detect_direction(distribution, 1, {}, "D") is Direction.DOWN


def test_resolve_positive_preset(layout_t2, positive_distribution):
    """test_resolve_positive_preset
    Every first stage and outcome response of the positive preset points up
    """
    directions = resolve_directions(parse_assumptions("M1,M2,K"), layout_t2, positive_distribution)
    assert directions
    assert all(direction is Direction.UP for direction in directions.values())


def test_resolve_without_second_instrument():
    """test_resolve_without_second_instrument
    Outcome monotonicity in a period without instrument is switched off
    """
    layout = build_layout(Horizon(periods=2, instrumented=(True, False)), markov=True)
    q = np.random.default_rng(3).dirichlet(np.ones(layout.d_q))
    distribution = distribution_from_q(q, layout)
    directions = resolve_directions(parse_assumptions("M1=up,M2"), layout, distribution)
    assert directions[CellKey.parse("Y2[y1=0]")] is Direction.OFF
    assert directions[CellKey.parse("Y2[y1=1]")] is Direction.OFF
    assert directions[CellKey.parse("Y1[]")] in (Direction.UP, Direction.DOWN)

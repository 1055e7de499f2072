"""
Tests for the ordering pipeline and its configuration file
"""
import json

import numpy as np
import pytest

from welfare_order.errors import InvalidInputError, ModelRefutedError
from welfare_order.models.regimes import WelfareSpec
from welfare_order.schemas.assumptions import parse_assumptions
from welfare_order.schemas.reports import DistributionSchema
from welfare_order.utils.dataset import (
    distribution_from_q,
    distribution_from_schema,
    drop_instruments,
    write_distribution,
)
from welfare_order.utils.pipeline import (
    observed_welfare,
    order_distribution,
    preset_distribution,
    prepare_problem,
    read_config,
    regime_bounds,
    run_pipeline,
)
from welfare_order.utils.regimes import regime_welfares

REFUTED = DistributionSchema(
    periods=1,
    instrumented=[True],
    z_values=[[0], [1]],
    probabilities=[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
    z_weights=[0.5, 0.5],
)


@pytest.fixture(scope="module")
def complier_distribution(layout_t1):
    """
    Everyone complies and Y = D: treating is better by exactly one.
    """
    q = np.zeros(layout_t1.d_q)
    q[5] = 1.0
    return distribution_from_q(q, layout_t1)


@pytest.fixture(scope="module")
def masked_run(positive_distribution):
    return order_distribution(
        positive_distribution, parse_assumptions("M1=up,M2=up,K"), solver="highs"
    )


@pytest.fixture(scope="module")
def unmasked_run(positive_distribution):
    return order_distribution(positive_distribution, parse_assumptions("K"), solver="highs")


def test_single_period_ordering(complier_distribution):
    """test_single_period_ordering
    Treat-all dominates treat-none; bounds and regret are exact
    """
    run = order_distribution(complier_distribution, parse_assumptions(None))
    report = run.report
    assert report.identified_set == [2]
    assert report.edges == [[2, 1]]
    assert report.tiers == [[2], [1]]
    assert report.lp_count == 2
    assert report.data_rank == report.d_p == 6
    assert report.observed_welfare == pytest.approx(0.5)
    assert [bounds.regime for bounds in report.welfare_bounds] == [2, 1]
    best = report.welfare_bounds[0]
    assert best.lower == pytest.approx(1.0, abs=1e-8)
    assert best.upper == pytest.approx(1.0, abs=1e-8)
    assert best.regret_lower == pytest.approx(0.5, abs=1e-8)
    assert report.adaptivity_gain == []
    assert not report.projected


def test_observed_welfare(complier_distribution):
    """test_observed_welfare
    Observed behavior follows the instrument, so half the population has Y = 1
    """
    assert observed_welfare(complier_distribution, WelfareSpec.terminal(1)) == pytest.approx(0.5)


def test_true_best_regime_identified(masked_run, positive_q, layout_t2):
    """test_true_best_regime_identified
    Every truly optimal regime survives and the true gaps lie inside their bounds
    """
    welfares = regime_welfares(positive_q, WelfareSpec.terminal(2), layout_t2)
    report = masked_run.report
    for k in np.flatnonzero(welfares >= welfares.max() - 1e-12) + 1:
        assert k in report.identified_set
    true_gaps = welfares[:, None] - welfares[None, :]
    assert np.all(masked_run.gaps.lower <= true_gaps + 1e-6)
    assert np.all(masked_run.gaps.upper >= true_gaps - 1e-6)
    assert report.d_q_active == 3**8
    assert report.lp_count == 56


def test_assumptions_shrink_identified_set(masked_run, unmasked_run):
    """test_assumptions_shrink_identified_set
    Monotonicity can only add edges, so the identified set can only shrink
    """
    assert set(masked_run.report.identified_set) <= set(unmasked_run.report.identified_set)
    assert masked_run.report.d_q_active < unmasked_run.report.d_q_active


def test_outcome_monotonicity_adds_edges(masked_run, positive_distribution):
    """test_outcome_monotonicity_adds_edges
    Adding M2 to M1 keeps every edge and can only shrink the identified set
    """
    treatment_only = order_distribution(
        positive_distribution, parse_assumptions("M1=up,K"), solver="highs"
    ).report
    edges = {tuple(edge) for edge in masked_run.report.edges}
    assert {tuple(edge) for edge in treatment_only.edges} <= edges
    assert set(masked_run.report.identified_set) <= set(treatment_only.identified_set)
    assert masked_run.report.d_q_active < treatment_only.d_q_active


def test_second_instrument_dropped(unmasked_run, positive_distribution):
    """test_second_instrument_dropped
    Ignoring z2 loses information: no new edges and a weakly larger identified set
    """
    pooled = order_distribution(
        drop_instruments(positive_distribution, [True, False]),
        parse_assumptions("K"),
        solver="highs",
    ).report
    assert pooled.d_q == 4096
    assert {tuple(edge) for edge in pooled.edges} <= {
        tuple(edge) for edge in unmasked_run.report.edges
    }
    assert set(unmasked_run.report.identified_set) <= set(pooled.identified_set)


def test_adaptivity_gain(masked_run):
    """test_adaptivity_gain
    Gains are reported for the adaptive regimes only
    """
    gains = masked_run.report.adaptivity_gain
    assert [gain.regime for gain in gains] == [3, 4, 5, 6]
    for gain in gains:
        assert gain.lower <= gain.upper + 1e-9


def test_refuted_distribution():
    """test_refuted_distribution
    An infeasible distribution is refused unless projection is requested
    """
    distribution = distribution_from_schema(REFUTED)
    with pytest.raises(ModelRefutedError):
        order_distribution(distribution, parse_assumptions(None))
    report = order_distribution(distribution, parse_assumptions(None), project=True).report
    assert report.projected
    assert report.feasibility_gap > 1e-3


def test_regime_bounds(complier_distribution):
    """test_regime_bounds
    Bounds for selected regimes only
    """
    observed, bounds = regime_bounds(complier_distribution, parse_assumptions(None), regimes=[1])
    assert observed == pytest.approx(0.5)
    assert len(bounds) == 1
    assert bounds[0].upper == pytest.approx(0.0, abs=1e-8)
    assert bounds[0].regret_upper == pytest.approx(-0.5, abs=1e-8)


def test_welfare_must_match_horizon(complier_distribution):
    """test_welfare_must_match_horizon
    Welfare weights are checked against the number of periods
    """
    with pytest.raises(InvalidInputError):
        prepare_problem(
            complier_distribution, parse_assumptions(None), WelfareSpec.terminal(2)
        )


def test_unknown_preset():
    """test_unknown_preset
    Only named presets can be simulated
    """
    with pytest.raises(InvalidInputError):
        preset_distribution("negative")


def test_run_pipeline(tmp_path, complier_distribution):
    """test_run_pipeline
    A configuration file drives ordering, inference and both output files
    """
    distribution_path = tmp_path / "p.json"
    write_distribution(complier_distribution, distribution_path)
    config_path = tmp_path / "run.env"
    config_path.write_text(
        "\n".join(
            [
                "HORIZON=1",
                "MARKOV=false",
                f"P={distribution_path}",
                "ASSUMPTIONS=M1=up",
                "INFER=true",
                f"OUT={tmp_path / 'report.json'}",
                f"DOT={tmp_path / 'order.dot'}",
            ]
        ),
        encoding="utf-8",
    )
    report = run_pipeline(config_path)
    assert report.identified_set == [2]
    assert report.assumptions == ["M1=up"]
    assert report.inference.noiseless
    assert report.inference.survivors == [2]
    written = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert written["identified_set"] == [2]
    assert "r2 -> r1;" in (tmp_path / "order.dot").read_text(encoding="utf-8")


def test_read_config_errors(tmp_path):
    """test_read_config_errors
    Missing files and configurations with two data sources are invalid
    """
    with pytest.raises(InvalidInputError):
        read_config(tmp_path / "absent.env")
    config_path = tmp_path / "run.env"
    config_path.write_text("PRESET=positive\nP=p.json\n", encoding="utf-8")
    with pytest.raises(InvalidInputError):
        read_config(config_path)


def test_run_pipeline_instrumented_flags(tmp_path, positive_distribution):
    """test_run_pipeline_instrumented_flags
    INSTRUMENTED pools the data over the switched-off instruments
    """
    distribution_path = tmp_path / "p.json"
    write_distribution(positive_distribution, distribution_path)
    config_path = tmp_path / "run.env"
    config_path.write_text(
        f"HORIZON=2\nINSTRUMENTED=true,false\nSOLVER=highs\nP={distribution_path}\n",
        encoding="utf-8",
    )
    report = run_pipeline(config_path)
    assert report.d_q == 4096
    assert report.d_p == 2 * 15
    assert report.markov
    config_path.write_text(
        f"HORIZON=2\nINSTRUMENTED=true\nP={distribution_path}\n", encoding="utf-8"
    )
    with pytest.raises(InvalidInputError):
        run_pipeline(config_path)

"""
Pipeline service: data source, mask, matrices, gap programs, ordering and the
JSON report.
"""
import logging
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError

from welfare_order import settings
from welfare_order.errors import InvalidInputError, ModelRefutedError
from welfare_order.models.assumptions import CellKey, Direction
from welfare_order.models.data import EmpiricalDistribution
from welfare_order.models.lp import Tolerances
from welfare_order.models.matrices import ProblemMatrices
from welfare_order.models.ordering import GapMatrix, PartialOrder
from welfare_order.models.regimes import Adaptivity, Horizon, WelfareSpec
from welfare_order.models.statespace import StateSpaceLayout
from welfare_order.schemas.assumptions import AssumptionConfig, parse_assumptions
from welfare_order.schemas.pipeline import PipelineConfig, parse_welfare
from welfare_order.schemas.reports import (
    AdaptivityGainSchema,
    EliminationStepSchema,
    InferenceReport,
    OrderingReport,
    RegimeBoundsSchema,
    RegimeSchema,
)
from welfare_order.schemas.simulate import PRESETS
from welfare_order.utils.assumptions import build_mask, resolve_directions
from welfare_order.utils.dataset import (
    drop_instruments,
    estimate_p,
    load_dataset,
    read_distribution,
)
from welfare_order.utils.inference import cs_procedure
from welfare_order.utils.lpcore import (
    certify_lower_gap,
    compute_gaps,
    feasibility_gap,
    project_p,
    welfare_bounds,
)
from welfare_order.utils.matrices import build_problem
from welfare_order.utils.ordering import (
    build_partial_order,
    build_report,
    nth_best_tiers,
    to_dot,
)
from welfare_order.utils.regimes import is_static, regime_labels
from welfare_order.utils.simulate import dgp_horizon, exact_distribution
from welfare_order.utils.statespace import build_layout, cell_labels

logger = logging.getLogger(__name__)

CERTIFY_BAND = 100


@dataclass
class OrderingRun:
    """Everything one ordering run produced."""

    layout: StateSpaceLayout
    matrices: ProblemMatrices
    p: np.ndarray
    gaps: GapMatrix
    order: PartialOrder
    report: OrderingReport


def observed_welfare(distribution: EmpiricalDistribution, welfare_spec: WelfareSpec) -> float:
    """observed_welfare
    sum_t w_t E[Y_t] under observed behavior, instrument values weighted by
    their frequencies.
    """
    labels = cell_labels(distribution.horizon.periods)
    per_cell = np.array([np.dot(welfare_spec.weights, y) for y, _ in labels])
    return float(distribution.z_weights @ (distribution.probabilities @ per_cell))


def _tolerances(eps_sign: Optional[float]) -> Tolerances:
    if eps_sign is None:
        return Tolerances.from_settings()
    return Tolerances.from_settings(sign=eps_sign)


def _feasible_p(matrices, distribution, project, tolerances, solver):
    p = distribution.p
    gap = feasibility_gap(matrices, p, tolerances, solver)
    if gap <= settings.FEASIBILITY_TOL:
        return p, gap, False
    if not project:
        raise ModelRefutedError(
            f"model refuted under the assumptions: L1 distance {gap:.3g} from the feasible set "
            f"exceeds {settings.FEASIBILITY_TOL:g}; rerun with projection to proceed"
        )
    logger.warning("Projecting p onto the feasible set (L1 distance %.3g)", gap)
    projected, _ = project_p(matrices, p, tolerances, solver)
    return projected, gap, True


def _certify(matrices, gaps, p, tolerances) -> Tuple[GapMatrix, List[List[int]]]:
    lower = gaps.lower.copy()
    upper = gaps.upper.copy()
    certified = []
    if matrices.n_active > settings.EXACT_CERTIFY_CAP:
        logger.info("Skipping exact certification: %d active states", matrices.n_active)
        return gaps, certified
    band = CERTIFY_BAND * tolerances.sign
    for k, k_prime in permutations(range(1, matrices.n_regimes + 1), 2):
        if abs(lower[k - 1, k_prime - 1] - tolerances.sign) > band:
            continue
        certificate = certify_lower_gap(matrices, k, k_prime, p, tolerances)
        if certificate.certified:
            value = float(certificate.value)
            lower[k - 1, k_prime - 1] = value
            upper[k_prime - 1, k - 1] = -value
            certified.append([k, k_prime])
    logger.info("Certified %d gap bounds near the threshold exactly", len(certified))
    return GapMatrix(lower=lower, upper=upper, lp_count=gaps.lp_count), certified


def bounds_report(
    matrices: ProblemMatrices,
    p: np.ndarray,
    regimes: Optional[Sequence[int]] = None,
    observed: float = 0.0,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
) -> List[RegimeBoundsSchema]:
    """bounds_report
    Sharp welfare bounds and regret bounds (relative to observed behavior) for
    the requested regimes, in the given order.
    """
    regimes = list(regimes) if regimes else list(range(1, matrices.n_regimes + 1))
    bounds = []
    for k in regimes:
        lower, upper = welfare_bounds(matrices, k, p, tolerances, solver)
        bounds.append(
            RegimeBoundsSchema(
                regime=k,
                lower=lower,
                upper=upper,
                regret_lower=lower - observed,
                regret_upper=upper - observed,
            )
        )
    return bounds


def adaptivity_gain(matrices: ProblemMatrices, gaps: GapMatrix) -> List[AdaptivityGainSchema]:
    """adaptivity_gain
    Valid bounds on W_k - max over static s of W_s for every adaptive regime:
    [min_s L_{k,s}, min_s U_{k,s}].
    """
    static = [index for index, regime in enumerate(matrices.regimes, start=1) if is_static(regime)]
    gains = []
    for k, regime in enumerate(matrices.regimes, start=1):
        if is_static(regime) or not static:
            continue
        columns = np.array(static) - 1
        gains.append(
            AdaptivityGainSchema(
                regime=k,
                lower=float(gaps.lower[k - 1, columns].min()),
                upper=float(gaps.upper[k - 1, columns].min()),
            )
        )
    return gains


def prepare_problem(
    distribution: EmpiricalDistribution,
    assumptions: AssumptionConfig,
    welfare_spec: Optional[WelfareSpec] = None,
    adaptivity: Adaptivity = Adaptivity.FULL,
) -> Tuple[ProblemMatrices, Dict[CellKey, Direction]]:
    """prepare_problem
    Layout, resolved directions, mask and matrices for one distribution.

    Returns:
        Tuple[ProblemMatrices, Dict[CellKey, Direction]]: Masked matrices and the
        direction used in every conditioning cell
    """
    periods = distribution.horizon.periods
    welfare_spec = welfare_spec or WelfareSpec.terminal(periods)
    if welfare_spec.periods != periods:
        raise InvalidInputError(f"welfare has {welfare_spec.periods} weights for T={periods}")
    horizon = Horizon(
        periods=periods, instrumented=distribution.horizon.instrumented, adaptivity=adaptivity
    )
    layout = build_layout(horizon, assumptions.markov)
    directions = resolve_directions(assumptions, layout, distribution)
    mask = build_mask(layout, assumptions, directions)
    matrices = build_problem(layout, welfare_spec, mask=mask)
    logger.info(
        "Problem: d_q=%d active=%d d_p=%d regimes=%d",
        layout.d_q,
        matrices.n_active,
        matrices.d_p,
        matrices.n_regimes,
    )
    return matrices, directions


def regime_bounds(
    distribution: EmpiricalDistribution,
    assumptions: AssumptionConfig,
    welfare_spec: Optional[WelfareSpec] = None,
    adaptivity: Adaptivity = Adaptivity.FULL,
    regimes: Optional[Sequence[int]] = None,
    project: bool = False,
    solver: Optional[str] = None,
) -> Tuple[float, List[RegimeBoundsSchema]]:
    """regime_bounds
    Observed welfare and the welfare and regret bounds of the requested regimes.
    """
    tolerances = Tolerances.from_settings()
    matrices, _ = prepare_problem(distribution, assumptions, welfare_spec, adaptivity)
    p, _, _ = _feasible_p(matrices, distribution, project, tolerances, solver)
    observed = observed_welfare(distribution, matrices.welfare)
    return observed, bounds_report(matrices, p, regimes, observed, tolerances, solver)


def order_distribution(
    distribution: EmpiricalDistribution,
    assumptions: AssumptionConfig,
    welfare_spec: Optional[WelfareSpec] = None,
    adaptivity: Adaptivity = Adaptivity.FULL,
    eps_sign: Optional[float] = None,
    solver: Optional[str] = None,
    project: bool = False,
    sort_cap: Optional[int] = None,
    bound_regimes: Optional[Sequence[int]] = None,
    certify: bool = False,
) -> OrderingRun:
    """order_distribution
    Sharp partial order of all regimes for one observed distribution.

    Args:
        distribution (EmpiricalDistribution): Estimated or exact cell probabilities
        assumptions (AssumptionConfig): Maintained assumptions; K selects the Markov layout
        welfare_spec (WelfareSpec, optional): Defaults to terminal welfare.
        adaptivity (Adaptivity): Regime class
        eps_sign (float, optional): Edge threshold. Defaults to settings.EPS_SIGN.
        solver (str, optional): LP backend
        project (bool): Project an infeasible p instead of failing
        sort_cap (int, optional): Maximal number of listed sorts
        bound_regimes (Sequence[int], optional): Regimes with welfare bounds. Defaults to all.
        certify (bool): Re-certify gap bounds near the threshold exactly

    Raises:
        ModelRefutedError: p is infeasible and projection is off
        DimensionError: state space or regime count above its cap

    Returns:
        OrderingRun: Matrices, gaps, order and report
    """
    periods = distribution.horizon.periods
    tolerances = _tolerances(eps_sign)
    matrices, directions = prepare_problem(distribution, assumptions, welfare_spec, adaptivity)
    layout = matrices.layout
    welfare_spec = matrices.welfare
    horizon = layout.horizon

    p, gap, projected = _feasible_p(matrices, distribution, project, tolerances, solver)
    gaps = compute_gaps(matrices, p, tolerances, solver)
    certified: List[List[int]] = []
    if certify:
        gaps, certified = _certify(matrices, gaps, p, tolerances)
    labels = regime_labels(matrices.regimes)
    order = build_partial_order(gaps, tolerances.sign, labels)
    ordering = build_report(order, gaps, sort_cap)

    tier_order = [k for tier in nth_best_tiers(order) for k in tier]
    requested = list(bound_regimes) if bound_regimes else tier_order
    observed = observed_welfare(distribution, welfare_spec)
    report = OrderingReport(
        periods=periods,
        markov=layout.markov,
        adaptivity=horizon.adaptivity.value,
        assumptions=assumptions.labels,
        d_q=layout.d_q,
        d_q_active=matrices.n_active,
        d_p=matrices.d_p,
        data_rank=matrices.B.rank(),
        n_regimes=matrices.n_regimes,
        solver=solver or settings.LP_SOLVER,
        lp_count=gaps.lp_count,
        feasibility_gap=gap,
        projected=projected,
        observed_welfare=observed,
        directions={str(key): value.value for key, value in directions.items()},
        certified_pairs=certified,
        regimes=[
            RegimeSchema(
                index=index,
                label=regime.label,
                tables=[list(table) for table in regime.tables],
                static=is_static(regime),
            )
            for index, regime in enumerate(matrices.regimes, start=1)
        ],
        welfare_bounds=bounds_report(matrices, p, requested, observed, tolerances, solver),
        adaptivity_gain=adaptivity_gain(matrices, gaps),
        **ordering,
    )
    logger.info("Identified set %s", report.identified_set)
    return OrderingRun(
        layout=layout, matrices=matrices, p=p, gaps=gaps, order=order, report=report
    )


def inference_report(
    run: OrderingRun,
    distribution: EmpiricalDistribution,
    alpha: float = 0.05,
    reps: Optional[int] = None,
    mode: str = "resolve",
    seed: Optional[int] = None,
    solver: Optional[str] = None,
) -> InferenceReport:
    """inference_report
    Confidence set for the identified set of an ordering run.
    """
    confidence_set = cs_procedure(
        distribution,
        run.matrices,
        alpha=alpha,
        bootstrap_reps=reps,
        mode=mode,
        seed=seed,
        tolerances=_tolerances(run.order.epsilon),
        solver=solver,
    )
    return InferenceReport(
        alpha=confidence_set.alpha,
        mode=confidence_set.mode,
        bootstrap_reps=confidence_set.bootstrap_reps,
        seed=confidence_set.seed,
        noiseless=confidence_set.noiseless,
        survivors=list(confidence_set.survivors),
        steps=[
            EliminationStepSchema(
                remaining=list(step.remaining),
                statistic=step.statistic,
                critical_value=step.critical_value,
                rejected=step.rejected,
                eliminated=step.eliminated,
            )
            for step in confidence_set.steps
        ],
    )


def read_config(path: Union[str, Path]) -> PipelineConfig:
    """read_config
    Parse a KEY=value configuration file. Keys are case-insensitive.

    Raises:
        InvalidInputError: missing file or invalid values
    """
    if not Path(path).is_file():
        raise InvalidInputError(f"configuration file {path} not found")
    values = {key.lower(): value for key, value in dotenv_values(path).items()}
    try:
        return PipelineConfig(**values)
    except ValidationError as error:
        raise InvalidInputError(f"invalid configuration {path}: {error}") from error


def preset_distribution(
    name: str, n_draws: Optional[int] = None, seed: Optional[int] = None
) -> EmpiricalDistribution:
    """preset_distribution
    Exact cell probabilities of a named simulation preset.
    """
    if name not in PRESETS:
        raise InvalidInputError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    config = PRESETS[name]
    layout = build_layout(dgp_horizon(config), markov=True)
    return exact_distribution(config, layout, n_draws=n_draws, seed=seed)


def load_distribution(config: PipelineConfig) -> EmpiricalDistribution:
    """load_distribution
    The distribution named by a configuration: unit data, a distribution file or
    a preset, pooled over the instruments that `instrumented` switches off.
    """
    if config.data:
        distribution = estimate_p(load_dataset(config.data, config.horizon, config.drop_z))
    elif config.p:
        distribution = read_distribution(config.p)
    else:
        distribution = preset_distribution(config.preset, config.n_draws, config.seed)
    if config.instrumented is not None:
        distribution = drop_instruments(distribution, config.instrumented)
    return distribution


def write_report(report: OrderingReport, path: Union[str, Path]):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(report.json(indent=2, sort_keys=True))
        handle.write("\n")


def run_pipeline(config: Union[PipelineConfig, str, Path]) -> OrderingReport:
    """run_pipeline
    Execute a configuration end to end and write the requested artifacts.

    Args:
        config (Union[PipelineConfig, str, Path]): Configuration or its file

    Returns:
        OrderingReport: The report that was written
    """
    if not isinstance(config, PipelineConfig):
        config = read_config(config)
    distribution = load_distribution(config)
    if distribution.horizon.periods != config.horizon:
        raise InvalidInputError(
            f"data has T={distribution.horizon.periods}, configuration says T={config.horizon}"
        )
    assumptions = parse_assumptions(config.assumptions)
    if config.markov and not assumptions.markov:
        assumptions = assumptions.copy(update={"markov": True})
    run = order_distribution(
        distribution,
        assumptions,
        welfare_spec=parse_welfare(config.welfare, config.horizon),
        adaptivity=config.adaptivity,
        eps_sign=config.eps_sign,
        solver=config.solver,
        project=config.project,
        sort_cap=config.sort_cap,
        bound_regimes=config.regimes or None,
        certify=config.certify,
    )
    report = run.report
    if config.infer:
        inference = inference_report(
            run, distribution, config.alpha, config.reps, config.mode, config.seed, config.solver
        )
        report = report.copy(update={"inference": inference})
    if config.out:
        write_report(report, config.out)
        logger.info("Wrote report to %s", config.out)
    if config.dot:
        Path(config.dot).write_text(to_dot(run.order), encoding="utf-8")
        logger.info("Wrote DOT graph to %s", config.dot)
    return report

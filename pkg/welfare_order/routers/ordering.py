"""
Ordering router + controller.
"""
from typing import Optional

import numpy as np
from fastapi import APIRouter
from pydantic import ValidationError

from welfare_order.errors import InvalidInputError, WelfareOrderError
from welfare_order.models.data import EmpiricalDistribution
from welfare_order.models.regimes import Horizon
from welfare_order.routers import http_error
from welfare_order.schemas.api import BoundsRequest, OrderRequest, RegimeBoundsResponse
from welfare_order.schemas.assumptions import AssumptionConfig, parse_assumptions
from welfare_order.schemas.pipeline import parse_welfare
from welfare_order.schemas.reports import DistributionSchema, OrderingReport
from welfare_order.utils.dataset import distribution_from_schema
from welfare_order.utils.pipeline import order_distribution, regime_bounds
from welfare_order.utils.statespace import z_values

router = APIRouter()


def request_distribution(request: OrderRequest) -> EmpiricalDistribution:
    """request_distribution
    Observed distribution carried by a request body.

    Raises:
        InvalidInputError: shapes or probabilities are invalid
    """
    horizon = Horizon(
        periods=request.horizon,
        instrumented=tuple(request.instrumented) if request.instrumented else None,
    )
    values = z_values(horizon)
    weights = request.z_weights or [1.0 / len(values)] * len(values)
    counts: Optional[list] = request.cell_counts
    try:
        schema = DistributionSchema(
            periods=horizon.periods,
            instrumented=list(horizon.instrumented),
            z_values=[list(z) for z in values],
            probabilities=request.probabilities,
            z_weights=weights,
            z_counts=None if counts is None else [int(sum(row)) for row in counts],
            cell_counts=counts,
        )
    except ValidationError as error:
        raise InvalidInputError(str(error)) from error
    distribution = distribution_from_schema(schema)
    if distribution.z_weights.shape != (len(values),):
        raise InvalidInputError(f"need {len(values)} instrument weights")
    if counts is not None and np.asarray(counts).shape != distribution.probabilities.shape:
        raise InvalidInputError("cell counts do not match the probabilities")
    return distribution


def request_assumptions(request: OrderRequest) -> AssumptionConfig:
    """request_assumptions
    Assumptions of a request body; `markov` selects the Markov layout as K does.
    """
    assumptions = parse_assumptions(request.assumptions)
    if request.markov and not assumptions.markov:
        assumptions = assumptions.copy(update={"markov": True})
    return assumptions


@router.post("/order", response_model=OrderingReport)
def order_endpoint(request: OrderRequest):
    """
    Sharp partial order of all regimes

    Args:
        request (OrderRequest): Observed distribution and assumptions

    Raises:
        HTTPException: 422 for invalid input, 409 if the model is refuted

    Returns:
        OrderingReport: Full ordering report
    """
    try:
        distribution = request_distribution(request)
        run = order_distribution(
            distribution,
            request_assumptions(request),
            welfare_spec=parse_welfare(request.welfare, request.horizon),
            adaptivity=request.adaptivity,
            eps_sign=request.eps_sign,
            project=request.project,
            sort_cap=request.sort_cap,
        )
    except WelfareOrderError as error:
        raise http_error(error) from error
    return run.report


@router.post("/bounds", response_model=RegimeBoundsResponse)
def bounds_endpoint(request: BoundsRequest):
    """
    Welfare and regret bounds of selected regimes

    Args:
        request (BoundsRequest): Observed distribution, assumptions and regimes

    Raises:
        HTTPException: 422 for invalid input, 409 if the model is refuted

    Returns:
        RegimeBoundsResponse: Observed welfare and per-regime bounds
    """
    try:
        distribution = request_distribution(request)
        observed, bounds = regime_bounds(
            distribution,
            request_assumptions(request),
            welfare_spec=parse_welfare(request.welfare, request.horizon),
            adaptivity=request.adaptivity,
            regimes=request.regimes,
            project=request.project,
        )
    except WelfareOrderError as error:
        raise http_error(error) from error
    return RegimeBoundsResponse(observed_welfare=observed, bounds=bounds)

"""
HTTP request schemas
"""
from typing import List, Optional

from pydantic import BaseModel, validator

from welfare_order.models.regimes import Adaptivity
from welfare_order.schemas.reports import RegimeBoundsSchema

# Due to pydantic validators:
# pylint: disable=no-self-argument
# Due to pydantic Config class:
# pylint: disable=too-few-public-methods
# pylint: disable=missing-class-docstring


class OrderRequest(BaseModel):
    """
    Validate request data
    """

    horizon: int
    instrumented: Optional[List[bool]] = None
    markov: bool = True
    adaptivity: Adaptivity = Adaptivity.FULL
    assumptions: List[str] = []
    welfare: str = "terminal"
    eps_sign: Optional[float] = None
    probabilities: List[List[float]]
    z_weights: Optional[List[float]] = None
    cell_counts: Optional[List[List[int]]] = None
    project: bool = False
    sort_cap: Optional[int] = None

    @validator("horizon")
    def positive_horizon(cls, value):
        """
        At least one period
        """
        if value < 1:
            raise ValueError("horizon must be at least 1")
        return value


class BoundsRequest(OrderRequest):
    """
    Validate request data
    """

    regimes: List[int] = []


class RegimeBoundsResponse(BaseModel):
    """
    Return response data
    """

    observed_welfare: float
    bounds: List[RegimeBoundsSchema]

"""
Regimes router + controller.
"""
from typing import List

from fastapi import APIRouter

from welfare_order.errors import WelfareOrderError
from welfare_order.models.regimes import Adaptivity, Horizon
from welfare_order.routers import http_error
from welfare_order.schemas.reports import RegimeSchema
from welfare_order.utils.regimes import enumerate_regimes, is_static

router = APIRouter()


@router.get("/regimes", response_model=List[RegimeSchema])
def list_regimes_endpoint(horizon: int = 2, adaptivity: Adaptivity = Adaptivity.FULL):
    """
    List every deterministic regime of a horizon

    Args:
        horizon (int, optional): T. Defaults to 2.
        adaptivity (Adaptivity, optional): Regime class. Defaults to full.

    Raises:
        HTTPException: 422 if T is invalid or has too many regimes

    Returns:
        List[RegimeSchema]: Regimes in index order
    """
    try:
        regimes = enumerate_regimes(Horizon(periods=horizon, adaptivity=adaptivity))
    except WelfareOrderError as error:
        raise http_error(error) from error
    return [
        RegimeSchema(
            index=regime.index,
            label=regime.label,
            tables=[list(table) for table in regime.tables],
            static=is_static(regime),
        )
        for regime in regimes
    ]

"""
HTTP routers and the mapping of service errors to responses.
"""
from fastapi import HTTPException

from welfare_order.errors import (
    AmbiguityError,
    DimensionError,
    InsufficientDataError,
    InvalidInputError,
    ModelRefutedError,
    WelfareOrderError,
)


def http_error(error: WelfareOrderError) -> HTTPException:
    """http_error
    Translate a service error into an HTTP exception.

    Args:
        error (WelfareOrderError): Raised by the service layer

    Returns:
        HTTPException: 422 for bad input, 409 for refuted models and ties, 500 otherwise
    """
    if isinstance(error, (InvalidInputError, DimensionError, InsufficientDataError)):
        status_code = 422
    elif isinstance(error, (ModelRefutedError, AmbiguityError)):
        status_code = 409
    else:
        status_code = 500
    return HTTPException(
        status_code=status_code,
        detail={"error": type(error).__name__, "message": str(error)},
    )

"""
Health router.
"""
from fastapi import APIRouter

router = APIRouter()


@router.get("/")
async def health_check():
    """
    Returns:
        Dict[str, str]: Service status
    """
    return {"status": "ok"}

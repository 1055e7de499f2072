"""
Pipeline configuration schema
"""
from typing import List, Optional

from pydantic import BaseModel, root_validator, validator

from welfare_order.errors import InvalidInputError
from welfare_order.models.regimes import Adaptivity, WelfareSpec

# Due to pydantic validators:
# pylint: disable=no-self-argument
# Due to pydantic Config class:
# pylint: disable=too-few-public-methods
# pylint: disable=missing-class-docstring


def _split(value):
    if value is None or isinstance(value, list):
        return value
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return [value]


def parse_welfare(text: str, periods: int) -> WelfareSpec:
    """parse_welfare
    "terminal" or "weights:w1,...,wT".

    Raises:
        InvalidInputError: unknown form or wrong number of weights
    """
    text = (text or "terminal").strip().lower()
    if text == "terminal":
        return WelfareSpec.terminal(periods)
    kind, _, rest = text.partition(":")
    if kind != "weights":
        raise InvalidInputError(f"welfare must be 'terminal' or 'weights:...', got {text!r}")
    try:
        weights = tuple(float(item) for item in rest.split(","))
    except ValueError as error:
        raise InvalidInputError(f"welfare weights {rest!r} are not numbers") from error
    if len(weights) != periods:
        raise InvalidInputError(f"need {periods} welfare weights, got {len(weights)}")
    return WelfareSpec(weights=weights)


class PipelineConfig(BaseModel):
    """
    Validate a pipeline configuration file
    """

    horizon: int = 2
    instrumented: Optional[List[bool]] = None
    markov: bool = True
    adaptivity: Adaptivity = Adaptivity.FULL
    assumptions: List[str] = []
    welfare: str = "terminal"
    data: Optional[str] = None
    p: Optional[str] = None
    preset: Optional[str] = None
    n_draws: Optional[int] = None
    drop_z: List[int] = []
    eps_sign: Optional[float] = None
    solver: Optional[str] = None
    project: bool = False
    certify: bool = False
    sort_cap: Optional[int] = None
    regimes: List[int] = []
    infer: bool = False
    alpha: float = 0.05
    reps: Optional[int] = None
    mode: str = "resolve"
    seed: Optional[int] = None
    out: Optional[str] = None
    dot: Optional[str] = None

    @validator("instrumented", "assumptions", "drop_z", "regimes", pre=True)
    def comma_lists(cls, value):
        """
        Accept comma separated strings
        """
        return _split(value)

    @validator("welfare")
    def welfare_form(cls, value, values):
        """
        Check the welfare functional against the horizon
        """
        try:
            parse_welfare(value, values.get("horizon", 2))
        except InvalidInputError as error:
            raise ValueError(str(error)) from error
        return value

    @validator("mode")
    def known_mode(cls, value):
        """
        Inference runs by vertex enumeration or by re-solving
        """
        if value not in ("vertex", "resolve"):
            raise ValueError("mode must be 'vertex' or 'resolve'")
        return value

    @root_validator(skip_on_failure=True)
    def one_source(cls, values):
        """
        Exactly one of data, p and preset gives the distribution
        """
        sources = [name for name in ("data", "p", "preset") if values.get(name)]
        if len(sources) != 1:
            raise ValueError(f"give exactly one of data, p, preset (got {sources or 'none'})")
        return values

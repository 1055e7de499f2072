"""
Identifying assumption configuration schema
"""
from typing import Dict, Iterable, Union

from pydantic import BaseModel, validator

from welfare_order.errors import InvalidInputError
from welfare_order.models.assumptions import Direction, Memory

# Due to pydantic validators:
# pylint: disable=no-self-argument
# Due to pydantic Config class:
# pylint: disable=too-few-public-methods
# pylint: disable=missing-class-docstring

ALIASES = {
    "M1": ("treatment_monotone", Direction.AUTO),
    "M2": ("outcome_monotone", Direction.AUTO),
    "L-SHORT": ("learning", Memory.SHORT),
    "L-LONG": ("learning", Memory.LONG),
    "L": ("learning", Memory.SHORT),
    "K": ("markov", True),
}


class AssumptionConfig(BaseModel):
    """
    Maintained assumptions.

    Directions apply to every conditioning cell unless a cell override keyed by
    the cell name (e.g. "D2[y1=1,d1=0]") says otherwise.
    """

    treatment_monotone: Direction = Direction.OFF
    outcome_monotone: Direction = Direction.OFF
    treatment_cells: Dict[str, Direction] = {}
    outcome_cells: Dict[str, Direction] = {}
    learning: Memory = Memory.OFF
    markov: bool = False

    class Config:
        use_enum_values = False
        allow_mutation = False

    @validator("outcome_monotone")
    def outcome_needs_treatment(cls, value, values):
        """
        Outcome monotonicity is only defined on top of treatment monotonicity
        """
        if value is not Direction.OFF and values.get("treatment_monotone") is Direction.OFF:
            raise ValueError("outcome monotonicity (M2) requires treatment monotonicity (M1)")
        return value

    @validator("outcome_cells")
    def outcome_cells_need_treatment(cls, value, values):
        """
        Same rule for per-cell overrides
        """
        active = any(direction is not Direction.OFF for direction in value.values())
        if active and values.get("treatment_monotone") is Direction.OFF:
            raise ValueError("outcome monotonicity (M2) requires treatment monotonicity (M1)")
        return value

    @property
    def labels(self):
        names = []
        if self.treatment_monotone is not Direction.OFF:
            names.append(f"M1={self.treatment_monotone.value}")
        if self.outcome_monotone is not Direction.OFF:
            names.append(f"M2={self.outcome_monotone.value}")
        if self.learning is not Memory.OFF:
            names.append(f"L-{self.learning.value}")
        if self.markov:
            names.append("K")
        return names


def parse_assumptions(items: Union[str, Iterable[str], None]) -> AssumptionConfig:
    """parse_assumptions
    Build a configuration from names such as "M1,M2,L-short,K" or "M1=up".

    Args:
        items (Union[str, Iterable[str], None]): Comma separated string or names

    Raises:
        InvalidInputError: Unknown name or inconsistent combination

    Returns:
        AssumptionConfig: Parsed configuration
    """
    if items is None:
        items = []
    if isinstance(items, str):
        items = items.split(",")
    values = {}
    for item in items:
        item = item.strip()
        if not item or item.lower() == "none":
            continue
        name, _, direction = item.partition("=")
        key = name.strip().upper()
        if key not in ALIASES:
            raise InvalidInputError(f"unknown assumption {item!r}; known: {sorted(ALIASES)}")
        field, default = ALIASES[key]
        if direction:
            if field not in ("treatment_monotone", "outcome_monotone"):
                raise InvalidInputError(f"assumption {name} takes no direction")
            try:
                values[field] = Direction(direction.strip().lower())
            except ValueError as error:
                raise InvalidInputError(f"unknown direction in {item!r}") from error
        else:
            values[field] = default
    try:
        return AssumptionConfig(**values)
    except ValueError as error:
        raise InvalidInputError(str(error)) from error

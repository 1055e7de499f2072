"""
Regime, horizon and welfare types.
"""
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import List, Optional, Sequence, Tuple

from welfare_order.errors import InvalidInputError


class Adaptivity(str, Enum):
    """How much history an allocation rule may use."""

    FULL = "full"
    LAG1 = "lag1"


@dataclass(frozen=True)
class Horizon:
    """
    Number of periods, which periods carry an instrument and the regime class.
    """

    periods: int
    instrumented: Optional[Tuple[bool, ...]] = None
    adaptivity: Adaptivity = Adaptivity.FULL

    def __post_init__(self):
        if self.periods < 1:
            raise InvalidInputError(f"horizon must have T >= 1, got {self.periods}")
        if self.instrumented is None:
            object.__setattr__(self, "instrumented", (True,) * self.periods)
        else:
            object.__setattr__(
                self, "instrumented", tuple(bool(flag) for flag in self.instrumented)
            )
        if len(self.instrumented) != self.periods:
            raise InvalidInputError(
                f"instrumented flags {self.instrumented} do not match T={self.periods}"
            )
        if not any(self.instrumented):
            raise InvalidInputError("at least one period must be instrumented")
        object.__setattr__(self, "adaptivity", Adaptivity(self.adaptivity))

    @property
    def instrumented_periods(self) -> Tuple[int, ...]:
        return tuple(t for t in range(1, self.periods + 1) if self.instrumented[t - 1])


def history_keys(period: int, adaptivity: Adaptivity) -> List[Tuple[int, ...]]:
    """history_keys
    Outcome histories a period-t rule is keyed by, in table order.

    Keys run in descending lexicographic order, so that for T=2 the flat table
    reads (delta_1, delta_2(1, .), delta_2(0, .)).

    Args:
        period (int): t, starting at 1
        adaptivity (Adaptivity): Regime class

    Returns:
        List[Tuple[int, ...]]: y^{t-1} (full) or (y_{t-1},) (lag1) keys
    """
    if period == 1:
        return [()]
    if Adaptivity(adaptivity) is Adaptivity.LAG1:
        return [(1,), (0,)]
    return list(product((1, 0), repeat=period - 1))


def key_position(period: int, y_history: Sequence[int], adaptivity: Adaptivity) -> int:
    """key_position
    Position of an outcome history inside the period-t table.
    """
    if period == 1:
        return 0
    if Adaptivity(adaptivity) is Adaptivity.LAG1:
        return 1 - int(y_history[period - 2])
    value = 0
    for bit in y_history[: period - 1]:
        value = (value << 1) | int(bit)
    return (2 ** (period - 1) - 1) - value


@dataclass(frozen=True)
class Regime:
    """
    Deterministic dynamic regime.

    tables[t-1][j] is the allocation for the j-th key of history_keys(t).
    Treatment histories are implicit: they are the regime's own earlier allocations.
    """

    index: int
    tables: Tuple[Tuple[int, ...], ...]
    adaptivity: Adaptivity = Adaptivity.FULL

    def __post_init__(self):
        for t, table in enumerate(self.tables, start=1):
            if len(table) != len(history_keys(t, self.adaptivity)):
                raise InvalidInputError(f"period {t} table has wrong length {len(table)}")
            if any(entry not in (0, 1) for entry in table):
                raise InvalidInputError(f"period {t} table entries must be 0/1")

    @property
    def periods(self) -> int:
        return len(self.tables)

    @property
    def flat(self) -> Tuple[int, ...]:
        return tuple(entry for table in self.tables for entry in table)

    def allocation(self, period: int, y_history: Sequence[int]) -> int:
        """allocation
        d_t for the observed outcome history.
        """
        table = self.tables[period - 1]
        return table[key_position(period, y_history, self.adaptivity)]

    @property
    def label(self) -> str:
        return f"Regime {self.index}: ({','.join(str(bit) for bit in self.flat)})"


@dataclass(frozen=True)
class StochasticRegime:
    """
    Regime whose tables hold treatment probabilities, keyed like Regime.
    """

    tables: Tuple[Tuple[float, ...], ...]
    adaptivity: Adaptivity = Adaptivity.FULL

    def __post_init__(self):
        for t, table in enumerate(self.tables, start=1):
            if len(table) != len(history_keys(t, self.adaptivity)):
                raise InvalidInputError(f"period {t} table has wrong length {len(table)}")
            for entry in table:
                if not 0.0 <= entry <= 1.0:
                    raise InvalidInputError(
                        f"allocation probability {entry} outside [0, 1] in period {t}"
                    )

    @property
    def periods(self) -> int:
        return len(self.tables)

    def probability(self, period: int, y_history: Sequence[int]) -> float:
        return self.tables[period - 1][key_position(period, y_history, self.adaptivity)]

    @classmethod
    def from_regime(cls, regime: Regime) -> "StochasticRegime":
        return cls(
            tables=tuple(tuple(float(v) for v in table) for table in regime.tables),
            adaptivity=regime.adaptivity,
        )


@dataclass(frozen=True)
class WelfareSpec:
    """
    Period weights of the welfare functional sum_t w_t E[Y_t(regime)].
    """

    weights: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.weights:
            raise InvalidInputError("welfare weights must not be empty")
        if all(w == 0.0 for w in self.weights):
            raise InvalidInputError("at least one welfare weight must be nonzero")

    @classmethod
    def terminal(cls, periods: int) -> "WelfareSpec":
        return cls(weights=(0.0,) * (periods - 1) + (1.0,))

    @property
    def periods(self) -> int:
        return len(self.weights)

    @property
    def is_terminal(self) -> bool:
        return all(w == 0.0 for w in self.weights[:-1]) and self.weights[-1] == 1.0


@dataclass(frozen=True)
class OutcomePath:
    """Realized outcomes and allocations of one latent state under one regime."""

    y: Tuple[int, ...]
    d: Tuple[int, ...]

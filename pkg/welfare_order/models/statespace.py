"""
Latent state space layout and response maps.
"""
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Mapping, Sequence, Tuple

from welfare_order.errors import InvalidInputError
from welfare_order.models.regimes import Horizon


@dataclass(frozen=True)
class BitField:
    """
    One counterfactual map (Y_t or D_t) stored as a contiguous run of state bits.

    Grid entry j is the j-th argument combination in lexicographic order with the
    earliest argument most significant. Bits are read MSB-first across the whole
    state, so entry j sits at bit offset + width - 1 - j.
    """

    name: str
    kind: str
    period: int
    args: Tuple[str, ...]
    offset: int

    @property
    def width(self) -> int:
        return 2 ** len(self.args)

    def position(self, entry: int) -> int:
        return self.offset + self.width - 1 - entry

    def grid(self) -> List[Tuple[int, ...]]:
        return list(product((0, 1), repeat=len(self.args)))

    def grid_index(self, values: Mapping[str, int]) -> int:
        index = 0
        for arg in self.args:
            index = (index << 1) | int(values[arg])
        return index


@dataclass(frozen=True)
class StateSpaceLayout:
    """
    Frozen bit layout of the latent response-type space.

    Fields are ordered by period, Y before D within a period.
    """

    horizon: Horizon
    markov: bool
    fields: Tuple[BitField, ...]

    @property
    def periods(self) -> int:
        return self.horizon.periods

    @property
    def n_bits(self) -> int:
        return sum(field.width for field in self.fields)

    @property
    def d_q(self) -> int:
        return 2**self.n_bits

    def field(self, name: str) -> BitField:
        for bit_field in self.fields:
            if bit_field.name == name:
                return bit_field
        raise KeyError(name)

    def y_field(self, period: int) -> BitField:
        return self.field(f"Y{period}")

    def d_field(self, period: int) -> BitField:
        return self.field(f"D{period}")


@dataclass(frozen=True)
class ResponseMaps:
    """
    Decoded latent state: the value table of every counterfactual map.
    """

    layout: StateSpaceLayout
    values: Dict[str, Tuple[int, ...]]

    def __post_init__(self):
        for bit_field in self.layout.fields:
            table = self.values.get(bit_field.name)
            if table is None or len(table) != bit_field.width:
                raise InvalidInputError(f"map {bit_field.name} must have {bit_field.width} entries")
            if any(value not in (0, 1) for value in table):
                raise InvalidInputError(f"map {bit_field.name} entries must be 0/1")

    def _lookup(self, bit_field: BitField, arguments: Mapping[str, int]) -> int:
        return self.values[bit_field.name][bit_field.grid_index(arguments)]

    def y_value(self, period: int, y_history: Sequence[int], d_history: Sequence[int]) -> int:
        """Y_t at (y^{t-1}, d^t)."""
        return self._lookup(self.layout.y_field(period), _arguments(y_history, d_history))

    def d_value(
        self,
        period: int,
        y_history: Sequence[int],
        d_history: Sequence[int],
        z_history: Sequence[int],
    ) -> int:
        """D_t at (y^{t-1}, d^{t-1}, z^t)."""
        return self._lookup(
            self.layout.d_field(period), _arguments(y_history, d_history, z_history)
        )


def _arguments(*histories: Sequence[int]) -> Dict[str, int]:
    names = ("y", "d", "z")
    values = {}
    for name, history in zip(names, histories):
        for t, value in enumerate(history, start=1):
            values[f"{name}{t}"] = int(value)
    return values

"""
Identifying assumption types.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from welfare_order.errors import ContradictionError


class Direction(str, Enum):
    UP = "up"
    DOWN = "down"
    AUTO = "auto"
    OFF = "off"


class Memory(str, Enum):
    """Learning-monotonicity variants."""

    OFF = "off"
    SHORT = "short"
    LONG = "long"


class MaskRelation(str, Enum):
    """Relation of the active set of one mask to that of another."""

    EQUAL = "equal"
    SUBSET = "subset"
    SUPERSET = "superset"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class CellKey:
    """
    A conditioning cell of one map: the map name ("D2", "Y1") and the values of
    the map arguments other than the monotone one.
    """

    map_name: str
    cell: Tuple[Tuple[str, int], ...] = ()

    @property
    def kind(self) -> str:
        return self.map_name[0]

    @property
    def period(self) -> int:
        return int(self.map_name[1:])

    def __str__(self):
        inner = ",".join(f"{name}={value}" for name, value in self.cell)
        return f"{self.map_name}[{inner}]"

    @classmethod
    def parse(cls, text: str) -> "CellKey":
        """Inverse of str(): "D2[y1=1,d1=0]"."""
        text = text.strip()
        map_name, _, rest = text.partition("[")
        rest = rest.rstrip("]")
        cell = []
        for item in filter(None, rest.split(",")):
            name, _, value = item.partition("=")
            cell.append((name.strip(), int(value)))
        return cls(map_name=map_name.strip(), cell=tuple(cell))


@dataclass(frozen=True)
class MaskVector:
    """h over the full state space; h_s = 0 marks an excluded state."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=bool).ravel()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        if not h.any():
            raise ContradictionError("the assumptions exclude every latent state")

    @property
    def active_count(self) -> int:
        return int(self.h.sum())

    @property
    def active_states(self) -> np.ndarray:
        return np.flatnonzero(self.h)

    @classmethod
    def full(cls, d_q: int) -> "MaskVector":
        return cls(np.ones(d_q, dtype=bool))

"""
Gap bounds and partial order types.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from welfare_order.errors import InvalidInputError


@dataclass(frozen=True)
class GapMatrix:
    """
    lower[k-1, k'-1] = L_{k,k'} and upper[k-1, k'-1] = U_{k,k'}; zero diagonal.
    """

    lower: np.ndarray
    upper: np.ndarray
    lp_count: int = 0

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.ndim != 2 or lower.shape[0] != lower.shape[1] or lower.shape != upper.shape:
            raise InvalidInputError("gap matrices must be square and of equal shape")
        np.fill_diagonal(lower, 0.0)
        np.fill_diagonal(upper, 0.0)
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def size(self) -> int:
        return self.lower.shape[0]

    @classmethod
    def from_lower(cls, lower) -> "GapMatrix":
        """GapMatrix from L alone, using U_{k,k'} = -L_{k',k}."""
        lower = np.array(lower, dtype=float)
        return cls(lower=lower, upper=-lower.T)


@dataclass(frozen=True)
class PartialOrder:
    """
    adjacency[k-1, k'-1] is True when regime k is known to beat regime k'.
    """

    adjacency: np.ndarray
    epsilon: float
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=bool)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise InvalidInputError("adjacency must be square")
        np.fill_diagonal(adjacency, False)
        adjacency.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(f"Regime {k}" for k in range(1, adjacency.shape[0] + 1))
            )

    @property
    def size(self) -> int:
        return self.adjacency.shape[0]

    @property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(range(1, self.size + 1))

    @property
    def edges(self) -> List[Tuple[int, int]]:
        rows, cols = np.nonzero(self.adjacency)
        return sorted((int(r) + 1, int(c) + 1) for r, c in zip(rows, cols))

    def successors(self, vertex: int) -> List[int]:
        return [int(c) + 1 for c in np.nonzero(self.adjacency[vertex - 1])[0]]

    def predecessors(self, vertex: int) -> List[int]:
        return [int(r) + 1 for r in np.nonzero(self.adjacency[:, vertex - 1])[0]]

    @classmethod
    def from_edges(cls, size: int, edges, epsilon: float = 0.0, labels=()) -> "PartialOrder":
        adjacency = np.zeros((size, size), dtype=bool)
        for source, target in edges:
            adjacency[source - 1, target - 1] = True
        return cls(adjacency=adjacency, epsilon=epsilon, labels=tuple(labels))


@dataclass(frozen=True)
class TopoSortList:
    sorts: Tuple[Tuple[int, ...], ...]
    truncated: bool
    count_exact: Optional[int] = None
    cap: int = field(default=1000)

    @property
    def initial_vertices(self) -> Tuple[int, ...]:
        return tuple(sorted({order[0] for order in self.sorts if order}))

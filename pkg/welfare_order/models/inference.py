"""
Inference types: dual polyhedra, vertex sets and confidence sets.
"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class DualPolyhedron:
    """
    {lambda : G lambda >= rhs} with G = [B; 1']' over the active states.

    side "upper" has rhs = Delta_{k,k'} (its minimum of p~'lambda is U_{k,k'});
    side "lower" has rhs = -Delta_{k,k'} (its minimum is -L_{k,k'}).
    """

    pair: Tuple[int, int]
    side: str
    G: sparse.csr_matrix
    rhs: np.ndarray

    @property
    def dimension(self) -> int:
        return self.G.shape[1]

    def contains(self, lam: np.ndarray, tol: float) -> bool:
        return bool(np.all(self.G @ lam >= self.rhs - tol))


@dataclass(frozen=True)
class VertexSet:
    pair: Tuple[int, int]
    side: str
    vertices: np.ndarray
    rays: np.ndarray
    lines: np.ndarray

    @property
    def size(self) -> int:
        return self.vertices.shape[0]


@dataclass(frozen=True)
class EliminationStep:
    remaining: Tuple[int, ...]
    statistic: float
    critical_value: float
    rejected: bool
    eliminated: int = 0


@dataclass
class ConfidenceSet:
    survivors: Tuple[int, ...]
    steps: List[EliminationStep] = field(default_factory=list)
    alpha: float = 0.05
    bootstrap_reps: int = 0
    mode: str = "resolve"
    seed: int = 0
    noiseless: bool = False

    @property
    def eliminated(self) -> Tuple[int, ...]:
        return tuple(step.eliminated for step in self.steps if step.rejected)

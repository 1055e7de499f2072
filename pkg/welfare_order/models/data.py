"""
Observed data types.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from welfare_order.models.regimes import Horizon


@dataclass(frozen=True)
class Dataset:
    """
    Validated unit-level sample with integer columns y1..yT, d1..dT, z1..zT.

    z columns of non-instrumented periods are identically 0.
    """

    frame: pd.DataFrame
    horizon: Horizon

    @property
    def n(self) -> int:
        return len(self.frame)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """
    Cell probabilities of (y, d) given z.

    probabilities[i, c] is P(cell c | z_values[i]) over all 2^(2T) cells, cells in
    lexicographic order of (y1..yT, d1..dT). The data vector p drops the last
    cell of every block. Counts are absent for exact (population) distributions.
    """

    horizon: Horizon
    z_values: Tuple[Tuple[int, ...], ...]
    probabilities: np.ndarray
    z_weights: np.ndarray
    z_counts: Optional[np.ndarray] = None
    cell_counts: Optional[np.ndarray] = None

    @property
    def n_cells(self) -> int:
        return self.probabilities.shape[1]

    @property
    def p(self) -> np.ndarray:
        return self.probabilities[:, :-1].ravel()

    @property
    def p_tilde(self) -> np.ndarray:
        return np.append(self.p, 1.0)

    @property
    def has_counts(self) -> bool:
        return self.z_counts is not None

    @property
    def n(self) -> Optional[int]:
        return None if self.z_counts is None else int(self.z_counts.sum())


@dataclass(frozen=True)
class SyntheticSample(Dataset):
    """A Dataset drawn from a known data-generating process."""

    seed: int = 0

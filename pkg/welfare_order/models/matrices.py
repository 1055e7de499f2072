"""
Sparse matrix containers for the welfare and data-consistency systems.
"""
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy import sparse

from welfare_order.errors import InvalidInputError
from welfare_order.models.regimes import Regime, WelfareSpec
from welfare_order.models.statespace import StateSpaceLayout


class SparseRowMatrix:
    """
    Row-sparse matrix in canonical CSR form (sorted, duplicate-free indices).
    """

    def __init__(self, matrix):
        csr = sparse.csr_matrix(matrix, dtype=float)
        csr.sum_duplicates()
        csr.sort_indices()
        if not np.all(np.isfinite(csr.data)):
            raise InvalidInputError("matrix values must be finite")
        self.csr = csr

    @property
    def shape(self) -> Tuple[int, int]:
        return self.csr.shape

    @property
    def n_rows(self) -> int:
        return self.csr.shape[0]

    @property
    def n_cols(self) -> int:
        return self.csr.shape[1]

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def row(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        start, stop = self.csr.indptr[index], self.csr.indptr[index + 1]
        return self.csr.indices[start:stop].copy(), self.csr.data[start:stop].copy()

    def dense_row(self, index: int) -> np.ndarray:
        return self.csr.getrow(index).toarray().ravel()

    def dot(self, vector: np.ndarray) -> np.ndarray:
        return self.csr @ np.asarray(vector, dtype=float)

    def select_columns(self, columns: Sequence[int]) -> "SparseRowMatrix":
        return SparseRowMatrix(self.csr[:, np.asarray(columns, dtype=np.int64)])

    def rank(self) -> int:
        """Row rank, taken from the Gram matrix so only n_rows x n_rows is dense."""
        return int(np.linalg.matrix_rank((self.csr @ self.csr.T).toarray()))

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()

    def triplets(self) -> Iterator[Tuple[int, int, float]]:
        coo = self.csr.tocoo()
        for row, col, value in zip(coo.row, coo.col, coo.data):
            yield int(row), int(col), float(value)

    def __repr__(self):
        return f"SparseRowMatrix(shape={self.shape}, nnz={self.nnz})"


@dataclass(frozen=True)
class CellLabel:
    """Observed cell (y, d) under instrument value z."""

    y: Tuple[int, ...]
    d: Tuple[int, ...]
    z: Tuple[int, ...]

    def __str__(self):
        join = lambda bits: "".join(str(bit) for bit in bits)  # noqa: E731
        return f"y={join(self.y)},d={join(self.d)}|z={join(self.z)}"


@dataclass(frozen=True)
class ProblemMatrices:
    """
    Welfare rows A, data rows B and their bookkeeping.

    Columns of A and B are the active latent states; active_states maps a column
    back to its encoded state s.
    """

    layout: StateSpaceLayout
    regimes: Tuple[Regime, ...]
    welfare: WelfareSpec
    A: SparseRowMatrix
    B: SparseRowMatrix
    row_labels: Tuple[CellLabel, ...]
    z_values: Tuple[Tuple[int, ...], ...]
    active_states: np.ndarray

    @property
    def d_p(self) -> int:
        return self.B.n_rows

    @property
    def n_regimes(self) -> int:
        return self.A.n_rows

    @property
    def n_active(self) -> int:
        return self.B.n_cols

    @property
    def cells_per_block(self) -> int:
        return 2 ** (2 * self.layout.periods) - 1

    @property
    def is_masked(self) -> bool:
        return self.n_active < self.layout.d_q

    def regime(self, index: int) -> Regime:
        return self.regimes[index - 1]

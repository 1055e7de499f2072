"""
Matrix service: data-consistency rows B, welfare rows A, gap rows and masks.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from welfare_order.errors import ContradictionError, InvalidInputError
from welfare_order.models.assumptions import MaskVector
from welfare_order.models.matrices import CellLabel, ProblemMatrices, SparseRowMatrix
from welfare_order.models.regimes import Regime, WelfareSpec
from welfare_order.models.statespace import StateSpaceLayout
from welfare_order.utils.regimes import enumerate_regimes, regime_outcomes
from welfare_order.utils.statespace import (
    cell_indices,
    cell_labels,
    observed_cells,
    state_chunks,
    z_values,
)

logger = logging.getLogger(__name__)


def build_B(
    layout: StateSpaceLayout, drop_redundant: bool = True
) -> Tuple[SparseRowMatrix, List[CellLabel]]:
    """build_B
    B[(y,d|z), s] = 1 iff state s produces cell (y, d) under z.

    Rows are z-block major; within a block cells follow lexicographic order of
    (y1..yT, d1..dT) and the last cell is dropped when `drop_redundant`.

    Args:
        layout (StateSpaceLayout): Layout
        drop_redundant (bool, optional): Drop the last cell per z. Defaults to True.

    Returns:
        Tuple[SparseRowMatrix, List[CellLabel]]: B and its row labels
    """
    periods = layout.periods
    n_cells = 2 ** (2 * periods)
    kept = n_cells - 1 if drop_redundant else n_cells
    zs = z_values(layout.horizon)
    rows, cols = [], []
    for block, z in enumerate(zs):
        for states in state_chunks(layout.d_q):
            y, d = observed_cells(states, z, layout)
            cells = cell_indices(y, d)
            keep = cells < kept
            rows.append(block * kept + cells[keep])
            cols.append(states[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    matrix = sparse.csr_matrix(
        (np.ones(rows.shape[0]), (rows, cols)), shape=(kept * len(zs), layout.d_q)
    )
    cells = cell_labels(periods)[:kept]
    labels = [CellLabel(y=y, d=d, z=z) for z in zs for y, d in cells]
    logger.info("Built B with %d rows and %d columns", matrix.shape[0], matrix.shape[1])
    return SparseRowMatrix(matrix), labels


def build_A(
    layout: StateSpaceLayout, regimes: Sequence[Regime], welfare_spec: WelfareSpec
) -> SparseRowMatrix:
    """build_A
    A[k, s] = sum_t w_t y_t(path(k, s)).
    """
    if welfare_spec.periods != layout.periods:
        raise InvalidInputError(
            f"welfare has {welfare_spec.periods} weights, horizon has {layout.periods} periods"
        )
    weights = np.asarray(welfare_spec.weights)
    blocks = []
    for states in state_chunks(layout.d_q):
        columns = np.vstack(
            [regime_outcomes(regime, states, layout) @ weights for regime in regimes]
        )
        blocks.append(sparse.csr_matrix(columns))
    return SparseRowMatrix(sparse.hstack(blocks, format="csr"))


def build_delta(A: SparseRowMatrix, k: int, k_prime: int) -> SparseRowMatrix:
    """build_delta
    Delta_{k,k'} = A_k - A_{k'} as a 1-row matrix.

    Raises:
        InvalidInputError: k == k' or an index out of range
    """
    if k == k_prime:
        raise InvalidInputError(f"gap row needs two distinct regimes, got k=k'={k}")
    for index in (k, k_prime):
        if not 1 <= index <= A.n_rows:
            raise InvalidInputError(f"regime index {index} outside 1..{A.n_rows}")
    return SparseRowMatrix(A.csr.getrow(k - 1) - A.csr.getrow(k_prime - 1))


def build_problem(
    layout: StateSpaceLayout,
    welfare_spec: WelfareSpec,
    regimes: Optional[Sequence[Regime]] = None,
    mask: Optional[MaskVector] = None,
) -> ProblemMatrices:
    """build_problem
    Assemble A and B for a layout, optionally restricted by a mask.
    """
    regimes = tuple(regimes if regimes is not None else enumerate_regimes(layout.horizon))
    B, labels = build_B(layout)
    matrices = ProblemMatrices(
        layout=layout,
        regimes=regimes,
        welfare=welfare_spec,
        A=build_A(layout, regimes, welfare_spec),
        B=B,
        row_labels=tuple(labels),
        z_values=tuple(z_values(layout.horizon)),
        active_states=np.arange(layout.d_q, dtype=np.int64),
    )
    if mask is not None:
        matrices = apply_mask(matrices, mask)
    return matrices


def apply_mask(matrices: ProblemMatrices, h) -> ProblemMatrices:
    """apply_mask
    Remove the columns of excluded states (B H, A H with the zero columns dropped).

    Args:
        matrices (ProblemMatrices): Matrices, possibly already masked
        h (MaskVector | np.ndarray): Mask over the full state space

    Raises:
        ContradictionError: mask excludes every state

    Returns:
        ProblemMatrices: Matrices over the surviving states
    """
    h = h.h if isinstance(h, MaskVector) else np.asarray(h, dtype=bool).ravel()
    if h.shape[0] != matrices.layout.d_q:
        raise InvalidInputError(f"mask has {h.shape[0]} entries, expected {matrices.layout.d_q}")
    if not h.any():
        raise ContradictionError("the mask excludes every latent state")
    keep = np.flatnonzero(h[matrices.active_states])
    if keep.shape[0] == 0:
        raise ContradictionError("the mask excludes every remaining latent state")
    logger.info("Mask keeps %d of %d active states", keep.shape[0], matrices.n_active)
    return ProblemMatrices(
        layout=matrices.layout,
        regimes=matrices.regimes,
        welfare=matrices.welfare,
        A=matrices.A.select_columns(keep),
        B=matrices.B.select_columns(keep),
        row_labels=matrices.row_labels,
        z_values=matrices.z_values,
        active_states=matrices.active_states[keep],
    )


def write_triplets(matrix: SparseRowMatrix, target, labels: Optional[Sequence] = None):
    """write_triplets
    Sparse triplet text export.

    Format: a `# rows cols nnz` header, optional `# row i: label` lines, then one
    `row col value` line per nonzero, 0-based, in row-major order.
    """
    with open(target, "w", encoding="utf-8") as handle:
        handle.write(f"# {matrix.n_rows} {matrix.n_cols} {matrix.nnz}\n")
        for row, label in enumerate(labels or ()):
            handle.write(f"# row {row}: {label}\n")
        for row, col, value in matrix.triplets():
            handle.write(f"{row} {col} {value:.17g}\n")

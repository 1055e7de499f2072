"""
Linear program types.
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from welfare_order.errors import InvalidInputError
from welfare_order.models.matrices import SparseRowMatrix


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERIC_FAILURE = "numeric-failure"


class Sense(str, Enum):
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class Tolerances:
    """
    feas: primal residual; dual: primal/dual objective gap; sign: strict positivity
    of a lower gap bound; tie: argmax ties.

    Only sign > feas is enforced. The duality gap is a certificate check and is
    allowed to be looser than sign, as the defaults (dual 1e-6, sign 1e-7) are.
    """

    feas: float = 1e-8
    dual: float = 1e-6
    sign: float = 1e-7
    tie: float = 1e-9

    def __post_init__(self):
        for name in ("feas", "dual", "sign", "tie"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"tolerance {name} must be positive")
        if self.sign <= self.feas:
            raise InvalidInputError("sign threshold must exceed the feasibility tolerance")

    @classmethod
    def from_settings(cls, **overrides) -> "Tolerances":
        # pylint: disable=import-outside-toplevel
        from welfare_order import settings

        values = dict(
            feas=settings.EPS_FEAS,
            dual=settings.EPS_DUAL,
            sign=settings.EPS_SIGN,
            tie=settings.EPS_TIE,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass
class SimplexLP:
    """
    max/min c'q  s.t.  Bq = p, 1'q = 1, q >= 0  [, extra_rows q = extra_rhs].
    """

    objective: np.ndarray
    B: SparseRowMatrix
    p: np.ndarray
    sense: Sense = Sense.MAX
    extra_rows: Optional[SparseRowMatrix] = None
    extra_rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=float).ravel()
        self.sense = Sense(self.sense)
        if self.objective.shape[0] != self.B.n_cols:
            raise InvalidInputError(
                f"objective has {self.objective.shape[0]} entries, B has {self.B.n_cols} columns"
            )
        if self.p.shape[0] != self.B.n_rows:
            raise InvalidInputError(f"p has {self.p.shape[0]} entries, B has {self.B.n_rows} rows")
        if self.extra_rows is not None:
            self.extra_rhs = np.asarray(self.extra_rhs, dtype=float).ravel()
            if self.extra_rows.n_cols != self.B.n_cols:
                raise InvalidInputError("extra rows must match the columns of B")
            if self.extra_rhs.shape[0] != self.extra_rows.n_rows:
                raise InvalidInputError("extra right-hand side has the wrong length")


@dataclass
class SolveResult:
    """
    Outcome of one LP.

    dual has one entry per constraint row (d_p data rows, the simplex row, then
    any extra rows). For a max problem it satisfies M'dual >= c, for a min
    problem M'dual <= c, with rhs'dual equal to the optimum.
    """

    status: SolveStatus
    value: float = float("nan")
    x: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    basis: Tuple[int, ...] = field(default_factory=tuple)
    redundant_rows: Tuple[int, ...] = field(default_factory=tuple)
    iterations: int = 0
    primal_residual: float = float("nan")
    duality_gap: float = float("nan")
    solver: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


@dataclass
class BackendResult:
    """
    Raw answer of a solver backend for max c'x s.t. Mx = b, x >= 0.

    y satisfies M'y >= c at an optimum. basis lists the basic columns; entries
    >= n denote the artificial column of row (entry - n). redundant_rows lists
    the rows of M spanned by the others; their artificials stay basic at zero.
    """

    status: SolveStatus
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    basis: Tuple[int, ...] = field(default_factory=tuple)
    redundant_rows: Tuple[int, ...] = field(default_factory=tuple)
    iterations: int = 0


@dataclass(frozen=True)
class ExactCertificate:
    """Rational re-evaluation of an optimal basis."""

    value: Fraction
    primal_feasible: bool
    dual_feasible: bool

    @property
    def certified(self) -> bool:
        return self.primal_feasible and self.dual_feasible

"""
LP core: a built-in revised simplex, the pluggable solver registry and the
bound programs over the latent-state simplex.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize, sparse

from welfare_order import settings
from welfare_order.errors import (
    DimensionError,
    InvalidInputError,
    ModelRefutedError,
    NumericFailureError,
)
from welfare_order.models.lp import (
    BackendResult,
    ExactCertificate,
    Sense,
    SimplexLP,
    SolveResult,
    SolveStatus,
    Tolerances,
)
from welfare_order.models.matrices import ProblemMatrices, SparseRowMatrix
from welfare_order.models.ordering import GapMatrix
from welfare_order.utils.matrices import build_delta

logger = logging.getLogger(__name__)

SolverBackend = Callable[
    [sparse.csr_matrix, np.ndarray, np.ndarray, Tolerances, int], BackendResult
]


class RevisedSimplex:
    """
    Two-phase revised simplex for max c'x s.t. Mx = b, x >= 0.

    Keeps an explicit basis inverse updated in product form and refactored every
    REINVERT_EVERY pivots. Pricing is Dantzig's largest reduced cost; after
    DEGENERATE_STREAK consecutive degenerate pivots it switches to Bland's rule
    for the rest of the phase. Ties always go to the lowest index.
    """

    REINVERT_EVERY = 64
    DEGENERATE_STREAK = 50
    PIVOT_TOL = 1e-9
    OPTIMALITY_TOL = 1e-10

    def __init__(self, matrix, rhs, objective, tolerances: Tolerances, max_iterations: int):
        rhs = np.asarray(rhs, dtype=float)
        self.signs = np.where(rhs < 0, -1.0, 1.0)
        self.M = sparse.csr_matrix(sparse.diags(self.signs) @ sparse.csr_matrix(matrix))
        self.M_columns = self.M.tocsc()
        self.M_rows_t = self.M.T.tocsr()
        self.b = rhs * self.signs
        self.c = np.asarray(objective, dtype=float)
        self.m, self.n = self.M.shape
        self.tolerances = tolerances
        self.max_iterations = max_iterations
        self.iterations = 0
        self.basis = np.arange(self.n, self.n + self.m)
        self.Binv = np.eye(self.m)
        self.x_B = self.b.copy()

    def _column(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        if j >= self.n:
            return np.array([j - self.n]), np.array([1.0])
        start, stop = self.M_columns.indptr[j], self.M_columns.indptr[j + 1]
        return self.M_columns.indices[start:stop], self.M_columns.data[start:stop]

    def _direction(self, j: int) -> np.ndarray:
        rows, values = self._column(j)
        return self.Binv[:, rows] @ values

    def _reinvert(self):
        basis_matrix = np.zeros((self.m, self.m))
        for position, j in enumerate(self.basis):
            rows, values = self._column(int(j))
            basis_matrix[rows, position] = values
        self.Binv = np.linalg.inv(basis_matrix)
        self.x_B = self.Binv @ self.b
        self.x_B[np.abs(self.x_B) < 1e-13] = 0.0

    def _pivot(self, row: int, j: int, direction: np.ndarray, step: float):
        self.x_B -= step * direction
        self.x_B[row] = step
        pivot_row = self.Binv[row] / direction[row]
        self.Binv -= np.outer(direction, pivot_row)
        self.Binv[row] = pivot_row
        self.basis[row] = j
        self.iterations += 1
        if self.iterations % self.REINVERT_EVERY == 0:
            self._reinvert()

    def _iterate(self, costs: np.ndarray, artificial_costs: np.ndarray) -> SolveStatus:
        """Run one phase to optimality. Artificial columns never enter."""
        bland = False
        streak = 0
        while True:
            if self.iterations >= self.max_iterations:
                logger.warning("Simplex iteration cap %d reached", self.max_iterations)
                return SolveStatus.NUMERIC_FAILURE
            basic_costs = np.where(
                self.basis < self.n,
                costs[np.minimum(self.basis, self.n - 1)],
                artificial_costs[np.maximum(self.basis - self.n, 0)],
            )
            y = basic_costs @ self.Binv
            reduced = costs - self.M_rows_t @ y
            structural_basic = self.basis[self.basis < self.n]
            reduced[structural_basic] = 0.0

            if bland:
                candidates = np.flatnonzero(reduced > self.OPTIMALITY_TOL)
                if candidates.shape[0] == 0:
                    return SolveStatus.OPTIMAL
                entering = int(candidates[0])
            else:
                entering = int(np.argmax(reduced))
                if reduced[entering] <= self.OPTIMALITY_TOL:
                    return SolveStatus.OPTIMAL

            direction = self._direction(entering)
            eligible = np.flatnonzero(direction > self.PIVOT_TOL)
            if eligible.shape[0] == 0:
                logger.warning("Unbounded direction at column %d", entering)
                return SolveStatus.NUMERIC_FAILURE
            ratios = np.maximum(self.x_B[eligible], 0.0) / direction[eligible]
            step = ratios.min()
            tied = eligible[ratios <= step + 1e-12]
            if bland:
                row = int(tied[np.argmin(self.basis[tied])])
            else:
                row = int(tied[np.argmax(direction[tied])])

            self._pivot(row, entering, direction, step)
            if step <= 1e-12:
                streak += 1
                if not bland and streak > self.DEGENERATE_STREAK:
                    logger.debug("Switching to Bland's rule after %d degenerate pivots", streak)
                    bland = True
            else:
                streak = 0

    def _drive_out_artificials(self):
        for row in range(self.m):
            if self.basis[row] < self.n:
                continue
            entries = self.M_rows_t @ self.Binv[row]
            entries[self.basis[self.basis < self.n]] = 0.0
            j = int(np.argmax(np.abs(entries)))
            if abs(entries[j]) <= self.PIVOT_TOL:
                # Redundant row: the artificial stays basic at zero.
                continue
            self.x_B[row] = 0.0
            self._pivot(row, j, self._direction(j), 0.0)

    def solve(self) -> BackendResult:
        phase_one = np.zeros(self.n)
        status = self._iterate(phase_one, -np.ones(self.m))
        if status is not SolveStatus.OPTIMAL:
            return BackendResult(status=status, iterations=self.iterations)
        self._reinvert()
        infeasibility = float(self.x_B[self.basis >= self.n].sum())
        if infeasibility > self.tolerances.feas:
            logger.debug("Phase one ended with infeasibility %.3g", infeasibility)
            return BackendResult(status=SolveStatus.INFEASIBLE, iterations=self.iterations)

        self._drive_out_artificials()
        status = self._iterate(self.c, np.zeros(self.m))
        if status is not SolveStatus.OPTIMAL:
            return BackendResult(status=status, iterations=self.iterations)
        self._reinvert()

        x = np.zeros(self.n)
        structural = self.basis < self.n
        x[self.basis[structural]] = np.maximum(self.x_B[structural], 0.0)
        basic_costs = np.where(structural, self.c[np.minimum(self.basis, self.n - 1)], 0.0)
        y = (basic_costs @ self.Binv) * self.signs
        redundant = tuple(sorted(int(j - self.n) for j in self.basis if j >= self.n))
        if redundant:
            logger.debug("%d of %d constraint rows are redundant", len(redundant), self.m)
        return BackendResult(
            status=SolveStatus.OPTIMAL,
            x=x,
            y=y,
            basis=tuple(int(j) for j in self.basis),
            redundant_rows=redundant,
            iterations=self.iterations,
        )


def _simplex_backend(matrix, rhs, objective, tolerances, max_iterations) -> BackendResult:
    simplex = RevisedSimplex(matrix, rhs, objective, tolerances, max_iterations)
    try:
        return simplex.solve()
    except np.linalg.LinAlgError:
        logger.warning("Basis became singular after %d iterations", simplex.iterations)
        return BackendResult(status=SolveStatus.NUMERIC_FAILURE, iterations=simplex.iterations)


def _highs_backend(matrix, rhs, objective, tolerances, max_iterations) -> BackendResult:
    result = optimize.linprog(
        -np.asarray(objective, dtype=float),
        A_eq=sparse.csr_matrix(matrix),
        b_eq=rhs,
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
            "maxiter": max_iterations,
        },
    )
    if result.status == 2:
        return BackendResult(status=SolveStatus.INFEASIBLE, iterations=int(result.nit))
    if result.status != 0:
        return BackendResult(status=SolveStatus.NUMERIC_FAILURE, iterations=int(result.nit))
    return BackendResult(
        status=SolveStatus.OPTIMAL,
        x=np.maximum(result.x, 0.0),
        y=-np.asarray(result.eqlin.marginals),
        iterations=int(result.nit),
    )


SOLVERS: Dict[str, SolverBackend] = {
    "simplex": _simplex_backend,
    "highs": _highs_backend,
}


def register_solver(name: str, backend: SolverBackend):
    """register_solver
    Plug in an external backend: (M, b, c, tolerances, max_iterations) in,
    BackendResult for max c'x s.t. Mx = b, x >= 0 out.
    """
    SOLVERS[name] = backend


def _backend(name: Optional[str]) -> SolverBackend:
    name = name or settings.LP_SOLVER
    try:
        return SOLVERS[name]
    except KeyError as error:
        raise InvalidInputError(f"unknown LP solver {name!r}; known: {sorted(SOLVERS)}") from error


def solve_standard_form(
    matrix,
    rhs: np.ndarray,
    objective: np.ndarray,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
) -> BackendResult:
    """solve_standard_form
    max c'x s.t. Mx = b, x >= 0 with the configured backend.
    """
    tolerances = tolerances or Tolerances.from_settings()
    return _backend(solver)(
        sparse.csr_matrix(matrix),
        np.asarray(rhs, dtype=float),
        np.asarray(objective, dtype=float),
        tolerances,
        settings.LP_MAX_ITERATIONS,
    )


def _system(lp: SimplexLP) -> Tuple[sparse.csr_matrix, np.ndarray]:
    blocks = [lp.B.csr, sparse.csr_matrix(np.ones((1, lp.B.n_cols)))]
    rhs = [lp.p, [1.0]]
    if lp.extra_rows is not None:
        blocks.append(lp.extra_rows.csr)
        rhs.append(lp.extra_rhs)
    return sparse.vstack(blocks, format="csr"), np.concatenate(rhs)


def solve(
    lp: SimplexLP, tolerances: Optional[Tolerances] = None, solver: Optional[str] = None
) -> SolveResult:
    """solve
    Optimize c'q over {q : Bq = p, 1'q = 1, q >= 0}.

    Args:
        lp (SimplexLP): Program
        tolerances (Tolerances, optional): Defaults to the configured tolerances.
        solver (str, optional): Registry key. Defaults to settings.LP_SOLVER.

    Returns:
        SolveResult: Status, optimum, primal q and dual certificate
    """
    tolerances = tolerances or Tolerances.from_settings()
    name = solver or settings.LP_SOLVER
    matrix, rhs = _system(lp)
    sign = 1.0 if lp.sense is Sense.MAX else -1.0
    raw = solve_standard_form(matrix, rhs, sign * lp.objective, tolerances, name)
    if raw.status is not SolveStatus.OPTIMAL:
        return SolveResult(status=raw.status, iterations=raw.iterations, solver=name)

    value = float(lp.objective @ raw.x)
    dual = sign * raw.y
    residual = float(np.abs(matrix @ raw.x - rhs).max())
    gap = abs(value - float(rhs @ dual))
    if residual > tolerances.feas or gap > tolerances.dual:
        logger.warning(
            "LP certificate outside tolerance: residual %.3g, duality gap %.3g", residual, gap
        )
    logger.debug(
        "LP %s solved by %s in %d iterations: %.12g", lp.sense.value, name, raw.iterations, value
    )
    return SolveResult(
        status=SolveStatus.OPTIMAL,
        value=value,
        x=raw.x,
        dual=dual,
        basis=raw.basis,
        redundant_rows=raw.redundant_rows,
        iterations=raw.iterations,
        primal_residual=residual,
        duality_gap=gap,
        solver=name,
    )


def _checked(result: SolveResult, what: str) -> float:
    if result.status is SolveStatus.INFEASIBLE:
        raise ModelRefutedError(
            f"{what}: no latent distribution reproduces the data under the maintained assumptions"
        )
    if result.status is not SolveStatus.OPTIMAL:
        raise NumericFailureError(f"{what}: solver ended with status {result.status.value}")
    return result.value


def _bounds(matrices, objective, p, tolerances, solver, what) -> Tuple[float, float]:
    upper = solve(SimplexLP(objective, matrices.B, p, Sense.MAX), tolerances, solver)
    lower = solve(SimplexLP(objective, matrices.B, p, Sense.MIN), tolerances, solver)
    return _checked(lower, what), _checked(upper, what)


def gap_bounds(
    matrices: ProblemMatrices,
    k: int,
    k_prime: int,
    p: np.ndarray,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
) -> Tuple[float, float]:
    """gap_bounds
    Sharp bounds (L_{k,k'}, U_{k,k'}) on W_k - W_{k'}.

    Raises:
        InvalidInputError: k == k'
        ModelRefutedError: infeasible data system
    """
    delta = build_delta(matrices.A, k, k_prime).dense_row(0)
    return _bounds(matrices, delta, p, tolerances, solver, f"gap {k},{k_prime}")


def welfare_bounds(
    matrices: ProblemMatrices,
    k: int,
    p: np.ndarray,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
) -> Tuple[float, float]:
    """welfare_bounds
    Sharp bounds (L_k, U_k) on W_k.
    """
    if not 1 <= k <= matrices.n_regimes:
        raise InvalidInputError(f"regime index {k} outside 1..{matrices.n_regimes}")
    return _bounds(matrices, matrices.A.dense_row(k - 1), p, tolerances, solver, f"welfare {k}")


def compute_gaps(
    matrices: ProblemMatrices,
    p: np.ndarray,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
    workers: Optional[int] = None,
) -> GapMatrix:
    """compute_gaps
    All gap bounds: one max and one min program per unordered pair, the
    reverse pair following from U_{k',k} = -L_{k,k'}.

    Programs run on a thread pool; results are placed in (k, k') order, so the
    matrix does not depend on the number of workers.
    """
    workers = workers or settings.LP_WORKERS
    tolerances = tolerances or Tolerances.from_settings()
    pairs = list(combinations(range(1, matrices.n_regimes + 1), 2))
    tasks = [(k, k_prime, sense) for k, k_prime in pairs for sense in (Sense.MAX, Sense.MIN)]

    def run(task):
        k, k_prime, sense = task
        delta = build_delta(matrices.A, k, k_prime).dense_row(0)
        result = solve(SimplexLP(delta, matrices.B, p, sense), tolerances, solver)
        return _checked(result, f"gap {k},{k_prime}")

    with ThreadPoolExecutor(max_workers=workers) as pool:
        values: List[float] = list(pool.map(run, tasks))

    size = matrices.n_regimes
    lower = np.zeros((size, size))
    upper = np.zeros((size, size))
    for index, (k, k_prime) in enumerate(pairs):
        u_value, l_value = values[2 * index], values[2 * index + 1]
        upper[k - 1, k_prime - 1] = u_value
        lower[k - 1, k_prime - 1] = l_value
        upper[k_prime - 1, k - 1] = -l_value
        lower[k_prime - 1, k - 1] = -u_value
    logger.info("Solved %d gap programs over %d regimes", len(tasks), size)
    return GapMatrix(lower=lower, upper=upper, lp_count=len(tasks))


def _l1_projection(matrices: ProblemMatrices, p, tolerances, solver) -> Tuple[float, np.ndarray]:
    d_p, n_active = matrices.B.shape
    identity = sparse.identity(d_p, format="csr")
    top = sparse.hstack([matrices.B.csr, identity, -identity])
    ones = sparse.hstack(
        [sparse.csr_matrix(np.ones((1, n_active))), sparse.csr_matrix((1, 2 * d_p))]
    )
    matrix = sparse.vstack([top, ones], format="csr")
    rhs = np.append(np.asarray(p, dtype=float), 1.0)
    objective = np.concatenate([np.zeros(n_active), -np.ones(2 * d_p)])
    raw = solve_standard_form(matrix, rhs, objective, tolerances, solver)
    if raw.status is not SolveStatus.OPTIMAL:
        raise NumericFailureError(f"L1 projection ended with status {raw.status.value}")
    gap = max(0.0, float(raw.x[n_active:].sum()))
    return gap, raw.x[:n_active]


def feasibility_gap(
    matrices: ProblemMatrices,
    p: np.ndarray,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
) -> float:
    """feasibility_gap
    min over the simplex of ||Bq - p||_1; zero iff the data system is feasible.
    """
    gap, _ = _l1_projection(matrices, p, tolerances, solver)
    return gap


def project_p(
    matrices: ProblemMatrices,
    p: np.ndarray,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
) -> Tuple[np.ndarray, float]:
    """project_p
    L1 projection of p onto {Bq : q in the simplex}.

    Returns:
        Tuple[np.ndarray, float]: Projected p and the L1 distance moved
    """
    gap, q = _l1_projection(matrices, p, tolerances, solver)
    return matrices.B.dot(q), gap


def attainable(
    matrices: ProblemMatrices,
    p: np.ndarray,
    row: np.ndarray,
    value: float,
    tolerances: Optional[Tolerances] = None,
    solver: Optional[str] = None,
) -> bool:
    """attainable
    Whether some feasible q has row . q = value.
    """
    extra = SparseRowMatrix(np.asarray(row, dtype=float).reshape(1, -1))
    lp = SimplexLP(
        np.zeros(matrices.n_active),
        matrices.B,
        p,
        Sense.MAX,
        extra_rows=extra,
        extra_rhs=np.array([value]),
    )
    result = solve(lp, tolerances, solver)
    if result.status is SolveStatus.NUMERIC_FAILURE:
        raise NumericFailureError("attainability program failed")
    return result.status is SolveStatus.OPTIMAL


def _exact(value: float) -> Fraction:
    return Fraction(float(value)).limit_denominator(10**12)


def _solve_exact(matrix: List[List[Fraction]], rhs: List[Fraction]) -> List[Fraction]:
    size = len(rhs)
    rows = [list(matrix[i]) + [rhs[i]] for i in range(size)]
    for column in range(size):
        pivot = next((r for r in range(column, size) if rows[r][column] != 0), None)
        if pivot is None:
            raise NumericFailureError("basis matrix is singular in exact arithmetic")
        rows[column], rows[pivot] = rows[pivot], rows[column]
        head = rows[column][column]
        rows[column] = [entry / head for entry in rows[column]]
        for r in range(size):
            factor = rows[r][column]
            if r != column and factor != 0:
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[column])]
    return [rows[i][size] for i in range(size)]


def certify_exact(
    lp: SimplexLP, result: SolveResult, cap: Optional[int] = None
) -> ExactCertificate:
    """certify_exact
    Re-evaluate the final basis of a simplex solve in rational arithmetic.

    The optimum is certified when the basic solution is nonnegative and every
    reduced cost has the optimal sign, both exactly.

    Raises:
        DimensionError: more active states than the certification cap
        InvalidInputError: result carries no basis
    """
    cap = settings.EXACT_CERTIFY_CAP if cap is None else cap
    if lp.B.n_cols > cap:
        raise DimensionError(
            f"{lp.B.n_cols} active states exceed the exact-certification cap {cap}"
        )
    if not result.optimal or not result.basis:
        raise InvalidInputError("exact certification needs an optimal simplex basis")

    matrix, rhs = _system(lp)
    dense = matrix.toarray()
    m, n = dense.shape
    exact_matrix = [[_exact(v) for v in row] for row in dense]
    exact_rhs = [_exact(v) for v in rhs]
    sign = 1 if lp.sense is Sense.MAX else -1
    costs = [sign * _exact(v) for v in lp.objective]

    def column(j):
        if j >= n:
            return [Fraction(int(i == j - n)) for i in range(m)]
        return [exact_matrix[i][j] for i in range(m)]

    basis_columns = [column(j) for j in result.basis]
    basis_matrix = [[basis_columns[c][r] for c in range(m)] for r in range(m)]
    x_basic = _solve_exact(basis_matrix, exact_rhs)
    basic_costs = [costs[j] if j < n else Fraction(0) for j in result.basis]
    transposed = [[basis_matrix[c][r] for c in range(m)] for r in range(m)]
    y = _solve_exact(transposed, basic_costs)

    primal_feasible = all(
        value >= 0 if j < n else value == 0 for j, value in zip(result.basis, x_basic)
    )
    basic = set(result.basis)
    dual_feasible = all(
        costs[j] - sum(exact_matrix[i][j] * y[i] for i in range(m) if exact_matrix[i][j]) <= 0
        for j in range(n)
        if j not in basic
    )
    value = sign * sum(cost * x for cost, x in zip(basic_costs, x_basic))
    return ExactCertificate(
        value=value, primal_feasible=primal_feasible, dual_feasible=dual_feasible
    )


def certify_lower_gap(
    matrices: ProblemMatrices,
    k: int,
    k_prime: int,
    p: np.ndarray,
    tolerances: Optional[Tolerances] = None,
) -> ExactCertificate:
    """certify_lower_gap
    Exact certificate of L_{k,k'} from a fresh built-in simplex solve.
    """
    delta = build_delta(matrices.A, k, k_prime).dense_row(0)
    lp = SimplexLP(delta, matrices.B, p, Sense.MIN)
    result = solve(lp, tolerances, solver="simplex")
    _checked(result, f"gap {k},{k_prime}")
    return certify_exact(lp, result)

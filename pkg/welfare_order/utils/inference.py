"""
Inference service: dual polyhedra, vertex enumeration, t-statistics and the
elimination procedure for a confidence set of the identified set.
"""
import logging
import warnings
from fractions import Fraction
from itertools import permutations
from typing import List, Optional, Tuple

import cdd
import numpy as np
from scipy import sparse

from welfare_order import settings
from welfare_order.errors import DimensionError, InsufficientDataError, InvalidInputError
from welfare_order.models.data import EmpiricalDistribution
from welfare_order.models.inference import (
    ConfidenceSet,
    DualPolyhedron,
    EliminationStep,
    VertexSet,
)
from welfare_order.models.lp import Tolerances
from welfare_order.models.matrices import ProblemMatrices
from welfare_order.utils.lpcore import compute_gaps, feasibility_gap, project_p
from welfare_order.utils.matrices import build_delta

logger = logging.getLogger(__name__)

MODES = ("vertex", "resolve")


def dualize(
    matrices: ProblemMatrices, k: int, k_prime: int
) -> Tuple[DualPolyhedron, DualPolyhedron]:
    """dualize
    Dual feasible sets of the two gap programs of (k, k').

    Returns:
        Tuple[DualPolyhedron, DualPolyhedron]: upper side {G l >= Delta} and
        lower side {G l >= -Delta}, G = [B; 1']'
    """
    delta = build_delta(matrices.A, k, k_prime).dense_row(0)
    ones = sparse.csr_matrix(np.ones((1, matrices.n_active)))
    G = sparse.vstack([matrices.B.csr, ones], format="csr").T.tocsr()
    return (
        DualPolyhedron(pair=(k, k_prime), side="upper", G=G, rhs=delta),
        DualPolyhedron(pair=(k, k_prime), side="lower", G=G, rhs=-delta),
    )


def _fraction(value: float) -> Fraction:
    return Fraction(float(value)).limit_denominator(10**12)


def enumerate_vertices(polyhedron: DualPolyhedron, dim_cap: Optional[int] = None) -> VertexSet:
    """enumerate_vertices
    Vertices, extreme rays and lines of a dual polyhedron by the double
    description method in exact arithmetic.

    Raises:
        DimensionError: dimension above dim_cap; use the resolve mode instead
    """
    dim_cap = settings.VERTEX_DIM_CAP if dim_cap is None else dim_cap
    if polyhedron.dimension > dim_cap:
        raise DimensionError(
            f"vertex enumeration in dimension {polyhedron.dimension} exceeds the cap of "
            f"{dim_cap}; use the resolve mode"
        )
    dense = polyhedron.G.toarray()
    rows = [
        [_fraction(-rhs)] + [_fraction(entry) for entry in row]
        for rhs, row in zip(polyhedron.rhs, dense)
    ]
    matrix = cdd.Matrix(rows, number_type="fraction")
    matrix.rep_type = cdd.RepType.INEQUALITY
    generators = cdd.Polyhedron(matrix).get_generators()
    vertices, rays, lines = [], [], []
    for index in range(generators.row_size):
        row = generators[index]
        point = [float(entry) for entry in row[1:]]
        if index in generators.lin_set:
            lines.append(point)
        elif row[0] == 1:
            vertices.append(point)
        else:
            rays.append(point)
    vertex_set = VertexSet(
        pair=polyhedron.pair,
        side=polyhedron.side,
        vertices=_stack(vertices, polyhedron.dimension),
        rays=_stack(rays, polyhedron.dimension),
        lines=_stack(lines, polyhedron.dimension),
    )
    logger.debug(
        "Pair %s %s side: %d vertices, %d rays, %d lines",
        polyhedron.pair,
        polyhedron.side,
        vertex_set.size,
        len(rays),
        len(lines),
    )
    return vertex_set


def _stack(points, dimension: int) -> np.ndarray:
    return np.array(points, dtype=float).reshape(-1, dimension)


def _studentize(numerator: np.ndarray, se: np.ndarray) -> np.ndarray:
    numerator = np.asarray(numerator, dtype=float)
    se = np.broadcast_to(se, numerator.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = numerator / np.where(se > 0, se, 1.0)
        result = np.where(se > 0, ratio, np.sign(numerator) * np.inf)
    return np.nan_to_num(result, nan=0.0, posinf=np.inf, neginf=-np.inf)


def standard_errors(distribution: EmpiricalDistribution, lambdas: np.ndarray) -> np.ndarray:
    """standard_errors
    Delta-method standard error of p~'lambda for every row of `lambdas`, with
    independent multinomial blocks per instrument value.

    Raises:
        InvalidInputError: the distribution carries no counts
    """
    if not distribution.has_counts:
        raise InvalidInputError("standard errors need cell counts")
    lambdas = np.atleast_2d(lambdas)
    n_z = len(distribution.z_values)
    kept = distribution.n_cells - 1
    weights = lambdas[:, : n_z * kept].reshape(-1, n_z, kept)
    weights = np.concatenate([weights, np.zeros((weights.shape[0], n_z, 1))], axis=2)
    probabilities = distribution.probabilities[None, :, :]
    mean = (weights * probabilities).sum(axis=2)
    second = (weights**2 * probabilities).sum(axis=2)
    variance = np.clip(second - mean**2, 0.0, None) / distribution.z_counts[None, :]
    return np.sqrt(variance.sum(axis=1))


def t_statistics(distribution: EmpiricalDistribution, vertex_set: VertexSet) -> np.ndarray:
    """t_statistics
    t_lambda = p~'lambda / se for every vertex. A zero standard error gives an
    infinite statistic with the sign of the estimate (0 when it is 0).
    """
    estimates = vertex_set.vertices @ distribution.p_tilde
    se = standard_errors(distribution, vertex_set.vertices)
    if np.any(se == 0):
        message = f"{int(np.sum(se == 0))} dual vertices have zero variance"
        logger.warning(message)
        warnings.warn(message, RuntimeWarning)
    return _studentize(estimates, se)


def bootstrap_distributions(
    distribution: EmpiricalDistribution, reps: int, seed: Optional[int] = None
) -> np.ndarray:
    """bootstrap_distributions
    Nonparametric bootstrap of p: rows are resampled within every instrument
    stratum, keeping the stratum sizes.

    Returns:
        np.ndarray: reps x d_p array of resampled p
    """
    if not distribution.has_counts:
        raise InvalidInputError("the bootstrap needs cell counts")
    if np.any(distribution.z_counts == 0):
        raise InsufficientDataError("an instrument value has no observations")
    seed = settings.DEFAULT_SEED if seed is None else seed
    streams = np.random.SeedSequence(seed).spawn(len(distribution.z_values))
    blocks = []
    for stream, n_z, probabilities in zip(
        streams, distribution.z_counts, distribution.probabilities
    ):
        rng = np.random.default_rng(stream)
        draws = rng.multinomial(int(n_z), probabilities / probabilities.sum(), size=reps)
        blocks.append(draws[:, :-1] / n_z)
    return np.hstack(blocks)


def _feasible(matrices, p, tolerances, solver) -> np.ndarray:
    if feasibility_gap(matrices, p, tolerances, solver) > settings.FEASIBILITY_TOL:
        p, _ = project_p(matrices, p, tolerances, solver)
    return p


def _vertex_statistics(distribution, matrices, draws, dim_cap):
    size = matrices.n_regimes
    statistics = np.full((size, size), np.inf)
    bootstrap = np.full((draws.shape[0], size, size), np.inf)
    draws_tilde = np.hstack([draws, np.ones((draws.shape[0], 1))])
    p_tilde = distribution.p_tilde
    for k, k_prime in permutations(range(1, size + 1), 2):
        upper, _ = dualize(matrices, k, k_prime)
        vertex_set = enumerate_vertices(upper, dim_cap)
        estimates = vertex_set.vertices @ p_tilde
        se = standard_errors(distribution, vertex_set.vertices)
        statistics[k - 1, k_prime - 1] = _studentize(estimates, se).min()
        shifted = (draws_tilde - p_tilde) @ vertex_set.vertices.T + np.maximum(estimates, 0.0)
        bootstrap[:, k - 1, k_prime - 1] = _studentize(shifted, se).min(axis=1)
    return statistics, bootstrap


def _resolve_statistics(distribution, matrices, draws, tolerances, solver):
    p_hat = _feasible(matrices, distribution.p, tolerances, solver)
    upper = compute_gaps(matrices, p_hat, tolerances, solver).upper
    replicates = np.stack(
        [
            compute_gaps(
                matrices, _feasible(matrices, draw, tolerances, solver), tolerances, solver
            ).upper
            for draw in draws
        ]
    )
    se = replicates.std(axis=0, ddof=1) if draws.shape[0] > 1 else np.zeros_like(upper)
    off_diagonal = ~np.eye(upper.shape[0], dtype=bool)
    if np.any(se[off_diagonal] == 0):
        message = "some gap bounds do not vary across bootstrap draws"
        logger.warning(message)
        warnings.warn(message, RuntimeWarning)
    statistics = _studentize(upper, se)
    bootstrap = _studentize(replicates - upper + np.maximum(upper, 0.0), se)
    return statistics, bootstrap


def _restricted(values: np.ndarray, indices: np.ndarray) -> np.ndarray:
    sub = values[..., indices[:, None], indices[None, :]].copy()
    diagonal = np.arange(indices.shape[0])
    sub[..., diagonal, diagonal] = np.inf
    return sub


def cs_procedure(
    distribution: EmpiricalDistribution,
    matrices: ProblemMatrices,
    alpha: float = 0.05,
    bootstrap_reps: Optional[int] = None,
    mode: str = "resolve",
    seed: Optional[int] = None,
    tolerances: Optional[Tolerances] = None,
    dim_cap: Optional[int] = None,
    solver: Optional[str] = None,
) -> ConfidenceSet:
    """cs_procedure
    Sequential elimination. The pair statistic t_{k,k'} studentizes the upper
    gap bound U_{k,k'}: a strongly negative value is evidence that k is worse
    than k'. While the joint null that all remaining regimes are incomparable
    is rejected, the regime with the smallest row minimum is eliminated.

    Without counts the distribution is treated as exact and a pair is
    comparable iff U_{k,k'} < -eps_sign; the survivors are the identified set.

    Args:
        distribution (EmpiricalDistribution): Estimated (or exact) distribution
        matrices (ProblemMatrices): Problem matrices, masked if assumptions hold
        alpha (float): Level in (0, 1)
        bootstrap_reps (int, optional): Defaults to settings.BOOTSTRAP_REPS.
        mode (str): "vertex" (dual vertices, small problems) or "resolve"
        seed (int, optional): Defaults to settings.DEFAULT_SEED.
        tolerances (Tolerances, optional): Solver tolerances
        dim_cap (int, optional): Vertex enumeration dimension cap
        solver (str, optional): LP backend

    Raises:
        InvalidInputError: alpha or mode out of range
        InsufficientDataError: an instrument value has no observations
        DimensionError: vertex mode above the dimension cap

    Returns:
        ConfidenceSet: Survivors and the per-step record
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    tolerances = tolerances or Tolerances.from_settings()
    bootstrap_reps = settings.BOOTSTRAP_REPS if bootstrap_reps is None else int(bootstrap_reps)
    seed = settings.DEFAULT_SEED if seed is None else seed
    noiseless = not distribution.has_counts

    if noiseless:
        statistics = compute_gaps(matrices, distribution.p, tolerances, solver).upper
        bootstrap = None
        bootstrap_reps = 0
    else:
        if np.any(distribution.z_counts == 0):
            raise InsufficientDataError("an instrument value has no observations")
        if bootstrap_reps < 1:
            raise InvalidInputError("need at least one bootstrap replicate")
        draws = bootstrap_distributions(distribution, bootstrap_reps, seed)
        if mode == "vertex":
            statistics, bootstrap = _vertex_statistics(distribution, matrices, draws, dim_cap)
        else:
            statistics, bootstrap = _resolve_statistics(
                distribution, matrices, draws, tolerances, solver
            )

    remaining = list(range(1, matrices.n_regimes + 1))
    steps: List[EliminationStep] = []
    while len(remaining) > 1:
        indices = np.array(remaining) - 1
        sub = _restricted(statistics, indices)
        statistic = float(sub.min())
        if noiseless:
            critical_value = -tolerances.sign
        else:
            replicated = _restricted(bootstrap, indices).min(axis=(1, 2))
            critical_value = float(np.quantile(replicated, alpha, method="lower"))
        rejected = statistic < critical_value
        eliminated = remaining[int(np.argmin(sub.min(axis=1)))] if rejected else 0
        steps.append(
            EliminationStep(
                remaining=tuple(remaining),
                statistic=statistic,
                critical_value=critical_value,
                rejected=rejected,
                eliminated=eliminated,
            )
        )
        logger.info(
            "Elimination step over %d regimes: T=%.6g, c=%.6g, eliminated %s",
            len(remaining),
            statistic,
            critical_value,
            eliminated or "none",
        )
        if not rejected:
            break
        remaining.remove(eliminated)

    return ConfidenceSet(
        survivors=tuple(remaining),
        steps=steps,
        alpha=alpha,
        bootstrap_reps=bootstrap_reps,
        mode=mode,
        seed=seed,
        noiseless=noiseless,
    )

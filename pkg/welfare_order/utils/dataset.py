"""
Dataset service: unit-level CSV loading, cell probability estimation and the
distribution file format.
"""
import logging
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from welfare_order.errors import InsufficientDataError, InvalidInputError
from welfare_order.models.data import Dataset, EmpiricalDistribution
from welfare_order.models.regimes import Horizon
from welfare_order.models.statespace import StateSpaceLayout
from welfare_order.schemas.reports import DistributionSchema
from welfare_order.utils.regimes import check_simplex
from welfare_order.utils.statespace import cell_indices, observed_cells, z_values

logger = logging.getLogger(__name__)


def column_names(periods: int) -> list:
    """Column order of unit-level files: y1,d1,z1,y2,d2,z2,..."""
    return [f"{name}{t}" for t in range(1, periods + 1) for name in ("y", "d", "z")]


def validate_frame(
    frame: pd.DataFrame, periods: Optional[int] = None, drop_z: Iterable[int] = ()
) -> Dataset:
    """validate_frame
    Check a unit-level frame and fix its horizon.

    A period is instrumented when its z column is present and not dropped.
    Missing or dropped z columns are set to 0.

    Args:
        frame (pd.DataFrame): Columns y1..yT, d1..dT and optionally z1..zT
        periods (int, optional): T. Defaults to the number of y columns.
        drop_z (Iterable[int]): Periods whose instrument is ignored

    Raises:
        InvalidInputError: missing columns, non-binary values or no instrument

    Returns:
        Dataset: Validated sample
    """
    if periods is None:
        periods = sum(1 for column in frame.columns if str(column).startswith("y"))
    if periods < 1:
        raise InvalidInputError("the data has no outcome columns")
    drop_z = set(int(t) for t in drop_z)
    frame = frame.copy()
    instrumented = []
    for t in range(1, periods + 1):
        for name in (f"y{t}", f"d{t}"):
            if name not in frame.columns:
                raise InvalidInputError(f"missing column {name}")
        present = f"z{t}" in frame.columns and t not in drop_z
        instrumented.append(present)
        if not present:
            frame[f"z{t}"] = 0
    frame = frame[column_names(periods)]
    if frame.isna().any().any():
        raise InvalidInputError("the data contains missing values")
    if not frame.isin([0, 1]).all().all():
        raise InvalidInputError("every value must be 0 or 1")
    horizon = Horizon(periods=periods, instrumented=tuple(instrumented))
    return Dataset(frame=frame.astype(np.int8).reset_index(drop=True), horizon=horizon)


def load_dataset(path, periods: Optional[int] = None, drop_z: Iterable[int] = ()) -> Dataset:
    """load_dataset
    Read a unit-level CSV with header y1,d1,z1,...
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise InvalidInputError(f"cannot read data file {path}: {error}") from error
    dataset = validate_frame(frame, periods, drop_z)
    logger.info(
        "Loaded %d units over T=%d, instrumented=%s",
        dataset.n,
        dataset.horizon.periods,
        dataset.horizon.instrumented,
    )
    return dataset


def estimate_p(dataset: Dataset) -> EmpiricalDistribution:
    """estimate_p
    Empirical cell frequencies within each instrument value.

    Raises:
        InsufficientDataError: an instrument value has no observations

    Returns:
        EmpiricalDistribution: Frequencies with counts
    """
    periods = dataset.horizon.periods
    frame = dataset.frame
    y = frame[[f"y{t}" for t in range(1, periods + 1)]].to_numpy()
    d = frame[[f"d{t}" for t in range(1, periods + 1)]].to_numpy()
    z = frame[[f"z{t}" for t in range(1, periods + 1)]].to_numpy()
    cells = cell_indices(y, d)
    n_cells = 4**periods
    values = z_values(dataset.horizon)
    counts = np.zeros((len(values), n_cells), dtype=np.int64)
    for block, z_value in enumerate(values):
        rows = np.all(z == np.asarray(z_value), axis=1)
        if not rows.any():
            named = ",".join(f"z{t}={v}" for t, v in enumerate(z_value, start=1))
            raise InsufficientDataError(f"no observations with {named}")
        counts[block] = np.bincount(cells[rows], minlength=n_cells)
    z_counts = counts.sum(axis=1)
    return EmpiricalDistribution(
        horizon=dataset.horizon,
        z_values=tuple(values),
        probabilities=counts / z_counts[:, None],
        z_weights=z_counts / z_counts.sum(),
        z_counts=z_counts,
        cell_counts=counts,
    )


def drop_instruments(
    distribution: EmpiricalDistribution, instrumented: Sequence[bool]
) -> EmpiricalDistribution:
    """drop_instruments
    Marginalize a distribution over the instruments switched off in `instrumented`.

    Blocks that differ only in a dropped instrument are pooled with their
    instrument weights; counts, when present, are summed.

    Raises:
        InvalidInputError: wrong number of flags or an instrument the data lacks

    Returns:
        EmpiricalDistribution: Distribution over the remaining instrument values
    """
    old = distribution.horizon
    instrumented = tuple(bool(flag) for flag in instrumented)
    if len(instrumented) != old.periods:
        raise InvalidInputError(f"need {old.periods} instrument flags, got {len(instrumented)}")
    added = [
        t
        for t, (new, had) in enumerate(zip(instrumented, old.instrumented), start=1)
        if new and not had
    ]
    if added:
        raise InvalidInputError(f"the data have no instrument in periods {added}")
    if instrumented == old.instrumented:
        return distribution
    horizon = Horizon(periods=old.periods, instrumented=instrumented, adaptivity=old.adaptivity)
    values = z_values(horizon)
    probabilities = np.zeros((len(values), distribution.n_cells))
    z_weights = np.zeros(len(values))
    counts = None if distribution.cell_counts is None else np.zeros_like(probabilities, np.int64)
    for block, z_value in enumerate(distribution.z_values):
        target = values.index(
            tuple(value if flag else 0 for value, flag in zip(z_value, instrumented))
        )
        weight = distribution.z_weights[block]
        probabilities[target] += weight * distribution.probabilities[block]
        z_weights[target] += weight
        if counts is not None:
            counts[target] += distribution.cell_counts[block]
    logger.info("Pooled %d instrument blocks into %d", len(distribution.z_values), len(values))
    return EmpiricalDistribution(
        horizon=horizon,
        z_values=tuple(values),
        probabilities=probabilities / z_weights[:, None],
        z_weights=z_weights,
        z_counts=None if counts is None else counts.sum(axis=1),
        cell_counts=counts,
    )


def distribution_from_q(
    q: np.ndarray, layout: StateSpaceLayout, z_weights: Optional[Sequence[float]] = None
) -> EmpiricalDistribution:
    """distribution_from_q
    Population cell probabilities implied by a latent distribution q over all
    d_q states. Instrument values are weighted uniformly unless given.
    """
    q = check_simplex(q, layout.d_q)
    values = z_values(layout.horizon)
    if z_weights is None:
        z_weights = np.full(len(values), 1.0 / len(values))
    z_weights = np.asarray(z_weights, dtype=float)
    if z_weights.shape != (len(values),) or np.any(z_weights <= 0):
        raise InvalidInputError(f"need {len(values)} positive instrument weights")
    states = np.flatnonzero(q)
    n_cells = 4**layout.periods
    probabilities = np.zeros((len(values), n_cells))
    for block, z_value in enumerate(values):
        y, d = observed_cells(states, z_value, layout)
        probabilities[block] = np.bincount(
            cell_indices(y, d), weights=q[states], minlength=n_cells
        )
    return EmpiricalDistribution(
        horizon=layout.horizon,
        z_values=tuple(values),
        probabilities=probabilities,
        z_weights=z_weights / z_weights.sum(),
    )


def distribution_to_schema(distribution: EmpiricalDistribution) -> DistributionSchema:
    return DistributionSchema(
        periods=distribution.horizon.periods,
        instrumented=list(distribution.horizon.instrumented),
        z_values=[list(z) for z in distribution.z_values],
        probabilities=distribution.probabilities.tolist(),
        z_weights=distribution.z_weights.tolist(),
        z_counts=None if distribution.z_counts is None else distribution.z_counts.tolist(),
        cell_counts=None
        if distribution.cell_counts is None
        else distribution.cell_counts.tolist(),
    )


def distribution_from_schema(schema: DistributionSchema) -> EmpiricalDistribution:
    """distribution_from_schema
    Rebuild and check a distribution read from JSON.

    Raises:
        InvalidInputError: shapes do not match the horizon
    """
    horizon = Horizon(periods=schema.periods, instrumented=tuple(schema.instrumented))
    expected = [list(z) for z in z_values(horizon)]
    if schema.z_values != expected:
        raise InvalidInputError(f"z values {schema.z_values} do not match the horizon {expected}")
    probabilities = np.asarray(schema.probabilities, dtype=float)
    if probabilities.shape != (len(expected), 4**schema.periods):
        raise InvalidInputError(f"probabilities have shape {probabilities.shape}")
    counts = None if schema.cell_counts is None else np.asarray(schema.cell_counts, dtype=np.int64)
    return EmpiricalDistribution(
        horizon=horizon,
        z_values=tuple(tuple(z) for z in expected),
        probabilities=probabilities,
        z_weights=np.asarray(schema.z_weights, dtype=float),
        z_counts=None if schema.z_counts is None else np.asarray(schema.z_counts, dtype=np.int64),
        cell_counts=counts,
    )


def write_distribution(distribution: EmpiricalDistribution, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(distribution_to_schema(distribution).json(indent=2))


def read_distribution(path) -> EmpiricalDistribution:
    """read_distribution
    Load a distribution file written by write_distribution.
    """
    try:
        schema = DistributionSchema.parse_file(path)
    except (OSError, ValueError) as error:
        raise InvalidInputError(f"cannot read distribution file {path}: {error}") from error
    return distribution_from_schema(schema)

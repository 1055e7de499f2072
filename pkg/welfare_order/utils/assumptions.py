"""
Assumption service: per-cell monotonicity directions and the state mask.
"""
import logging
import warnings
from itertools import combinations, product
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from welfare_order import settings
from welfare_order.errors import InsufficientDataError, InvalidInputError
from welfare_order.models.assumptions import CellKey, Direction, MaskRelation, MaskVector, Memory
from welfare_order.models.data import EmpiricalDistribution
from welfare_order.models.statespace import BitField, StateSpaceLayout
from welfare_order.schemas.assumptions import AssumptionConfig
from welfare_order.utils.statespace import cell_labels, field_values, state_chunks

logger = logging.getLogger(__name__)


def _monotone_argument(bit_field: BitField) -> str:
    return f"z{bit_field.period}" if bit_field.kind == "D" else f"d{bit_field.period}"


def cell_keys(bit_field: BitField) -> Iterator[CellKey]:
    """cell_keys
    Conditioning cells of one map: every value of the arguments other than the
    monotone one (z_t for D_t, d_t for Y_t). Empty when the map does not take the
    monotone argument.
    """
    monotone = _monotone_argument(bit_field)
    if monotone not in bit_field.args:
        return
    rest = tuple(arg for arg in bit_field.args if arg != monotone)
    for values in product((0, 1), repeat=len(rest)):
        yield CellKey(bit_field.name, tuple(zip(rest, values)))


def cell_directions(config: AssumptionConfig, layout: StateSpaceLayout) -> Dict[CellKey, Direction]:
    """cell_directions
    Expand global directions and per-cell overrides to every conditioning cell.

    Raises:
        InvalidInputError: an override names a cell the layout does not have
    """
    directions: Dict[CellKey, Direction] = {}
    known = set()
    for bit_field in layout.fields:
        if bit_field.kind == "D":
            default, overrides = config.treatment_monotone, config.treatment_cells
        else:
            default, overrides = config.outcome_monotone, config.outcome_cells
        for key in cell_keys(bit_field):
            known.add(str(key))
            directions[key] = overrides.get(str(key), default)
    unknown = (set(config.treatment_cells) | set(config.outcome_cells)) - known
    if unknown:
        raise InvalidInputError(f"unknown conditioning cells {sorted(unknown)}")
    return directions


def _cell_columns(distribution: EmpiricalDistribution) -> Dict[str, np.ndarray]:
    periods = distribution.horizon.periods
    labels = cell_labels(periods)
    columns = {}
    z = np.asarray(distribution.z_values, dtype=np.int8)
    for t in range(1, periods + 1):
        columns[f"y{t}"] = np.array([label[0][t - 1] for label in labels], dtype=np.int8)[None, :]
        columns[f"d{t}"] = np.array([label[1][t - 1] for label in labels], dtype=np.int8)[None, :]
        columns[f"z{t}"] = z[:, t - 1][:, None]
    return columns


def _contrast(
    distribution: EmpiricalDistribution,
    period: int,
    history_cell: Mapping[str, int],
    target: str,
    n_min: int,
) -> float:
    columns = _cell_columns(distribution)
    weights = distribution.z_weights[:, None] * distribution.probabilities
    selected = np.ones(weights.shape, dtype=bool)
    for name, value in history_cell.items():
        selected &= columns[name] == value
    outcome = columns[target]
    arm_means = []
    for arm in (0, 1):
        arm_mask = selected & (columns[f"z{period}"] == arm)
        if distribution.has_counts:
            count = int(distribution.cell_counts[arm_mask].sum())
            if count < n_min:
                raise InsufficientDataError(
                    f"{count} observations with z{period}={arm} in cell {dict(history_cell)}, "
                    f"need {n_min} to detect a direction"
                )
        mass = float(weights[arm_mask].sum())
        if mass <= 0.0:
            raise InsufficientDataError(
                f"no mass with z{period}={arm} in cell {dict(history_cell)}"
            )
        arm_means.append(float((weights * outcome)[arm_mask].sum()) / mass)
    return arm_means[1] - arm_means[0]


def _sign_to_direction(difference: float, what: str) -> Direction:
    if difference > 0.0:
        return Direction.UP
    if difference < 0.0:
        return Direction.DOWN
    message = f"zero instrument contrast for {what}; using direction up"
    logger.warning(message)
    warnings.warn(message, RuntimeWarning)
    return Direction.UP


def detect_direction(
    distribution: EmpiricalDistribution,
    period: int,
    history_cell: Mapping[str, int],
    target: str = "D",
    n_min: Optional[int] = None,
) -> Direction:
    """detect_direction
    Sign of E[target_t | Z_t=1, cell] - E[target_t | Z_t=0, cell].

    Args:
        distribution (EmpiricalDistribution): Observed cell probabilities
        period (int): Period t of the instrument
        history_cell (Mapping[str, int]): Observed conditioning values, e.g. {"y1": 1}
        target (str): "D" for treatment, "Y" for outcome
        n_min (int, optional): Minimal observations per arm. Defaults to settings.N_MIN.

    Raises:
        InsufficientDataError: an arm has too few observations or no mass

    Returns:
        Direction: up or down; a zero contrast resolves to up with a warning
    """
    n_min = settings.N_MIN if n_min is None else n_min
    name = f"{target.lower()}{period}"
    difference = _contrast(distribution, period, history_cell, name, n_min)
    return _sign_to_direction(difference, f"{target.upper()}{period}{dict(history_cell)}")


def _outcome_direction(
    distribution: EmpiricalDistribution,
    key: CellKey,
    treatment_default: Direction,
    n_min: int,
) -> Direction:
    # The reduced form sign equals the effect sign times the first stage sign.
    cell = dict(key.cell)
    outcome = _contrast(distribution, key.period, cell, f"y{key.period}", n_min)
    if treatment_default is Direction.UP:
        first_stage = 1.0
    elif treatment_default is Direction.DOWN:
        first_stage = -1.0
    else:
        first_stage = _contrast(distribution, key.period, cell, f"d{key.period}", n_min)
    return _sign_to_direction(float(np.sign(outcome) * np.sign(first_stage)), str(key))


def resolve_directions(
    config: AssumptionConfig,
    layout: StateSpaceLayout,
    distribution: Optional[EmpiricalDistribution] = None,
    n_min: Optional[int] = None,
) -> Dict[CellKey, Direction]:
    """resolve_directions
    Replace every "auto" direction by the direction detected from the data.

    Outcome cells of a period without instrument cannot be detected and are
    switched off with a warning.

    Raises:
        InvalidInputError: auto directions but no distribution
        InsufficientDataError: too few observations in a detection cell
    """
    n_min = settings.N_MIN if n_min is None else n_min
    directions = cell_directions(config, layout)
    resolved: Dict[CellKey, Direction] = {}
    for key, direction in directions.items():
        if direction is not Direction.AUTO:
            resolved[key] = direction
            continue
        if distribution is None:
            raise InvalidInputError(f"direction of {key} is auto but no data was given")
        if key.kind == "D":
            resolved[key] = detect_direction(distribution, key.period, dict(key.cell), "D", n_min)
        elif not layout.horizon.instrumented[key.period - 1]:
            logger.warning(
                "No instrument in period %d; outcome monotonicity of %s is off", key.period, key
            )
            resolved[key] = Direction.OFF
        else:
            resolved[key] = _outcome_direction(distribution, key, config.treatment_monotone, n_min)
        logger.info("Direction of %s resolved to %s", key, resolved[key].value)
    return resolved


def _rank(y_previous: int, d_previous: int, memory: Memory) -> int:
    if memory is Memory.LONG:
        return abs(y_previous - d_previous)
    return y_previous - d_previous


def _learning_pairs(layout: StateSpaceLayout, memory: Memory) -> Iterator[Tuple[int, int]]:
    # (higher, lower): D2 at the first grid entry must be at least D2 at the second.
    bit_field = layout.d_field(2)
    others = [arg for arg in bit_field.args if arg not in ("y1", "d1")]
    histories = list(product((0, 1), repeat=2))
    for slice_values in product((0, 1), repeat=len(others)):
        base = dict(zip(others, slice_values))
        for first, second in combinations(histories, 2):
            rank_first = _rank(*first, memory)
            rank_second = _rank(*second, memory)
            if rank_first == rank_second:
                continue
            if rank_first > rank_second:
                first, second = second, first
            high = bit_field.grid_index({**base, "y1": first[0], "d1": first[1]})
            low = bit_field.grid_index({**base, "y1": second[0], "d1": second[1]})
            yield high, low


def build_mask(
    layout: StateSpaceLayout,
    config: AssumptionConfig,
    directions: Optional[Dict[CellKey, Direction]] = None,
) -> MaskVector:
    """build_mask
    h_s = 1 iff state s satisfies every active restriction. Restrictions act
    independently per conditioning cell.

    Args:
        layout (StateSpaceLayout): Layout
        config (AssumptionConfig): Maintained assumptions
        directions (Dict[CellKey, Direction], optional): Resolved directions.
            Defaults to the directions of the configuration.

    Raises:
        InvalidInputError: an unresolved auto direction, or learning with T != 2
        ContradictionError: every state is excluded

    Returns:
        MaskVector: Mask over all d_q states
    """
    directions = cell_directions(config, layout) if directions is None else directions
    unresolved = [str(key) for key, direction in directions.items() if direction is Direction.AUTO]
    if unresolved:
        raise InvalidInputError(f"unresolved auto directions for {unresolved}")
    if config.learning is not Memory.OFF and layout.periods != 2:
        raise InvalidInputError("learning monotonicity is defined for two periods only")

    restrictions = []
    for key, direction in directions.items():
        if direction is Direction.OFF:
            continue
        bit_field = layout.field(key.map_name)
        base = dict(key.cell)
        monotone = _monotone_argument(bit_field)
        at_zero = bit_field.grid_index({**base, monotone: 0})
        at_one = bit_field.grid_index({**base, monotone: 1})
        if direction is Direction.UP:
            restrictions.append((bit_field, at_one, at_zero))
        else:
            restrictions.append((bit_field, at_zero, at_one))
    if config.learning is not Memory.OFF:
        d_field = layout.d_field(2)
        for high, low in _learning_pairs(layout, config.learning):
            restrictions.append((d_field, high, low))

    h = np.ones(layout.d_q, dtype=bool)
    for states in state_chunks(layout.d_q):
        keep = np.ones(states.shape[0], dtype=bool)
        for bit_field, high, low in restrictions:
            keep &= field_values(states, bit_field, high) >= field_values(states, bit_field, low)
        h[states] = keep
    mask = MaskVector(h)
    logger.info(
        "Mask %s keeps %d of %d states",
        ",".join(config.labels) or "none",
        mask.active_count,
        layout.d_q,
    )
    return mask


def compare_masks(first: MaskVector, second: MaskVector) -> MaskRelation:
    """compare_masks
    Relation of the active set of `first` to that of `second`.
    """
    if first.h.shape != second.h.shape:
        raise InvalidInputError("masks cover different state spaces")
    if np.array_equal(first.h, second.h):
        return MaskRelation.EQUAL
    if np.all(first.h >= second.h):
        return MaskRelation.SUPERSET
    if np.all(first.h <= second.h):
        return MaskRelation.SUBSET
    return MaskRelation.INCOMPARABLE

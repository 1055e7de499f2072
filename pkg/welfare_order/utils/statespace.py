"""
Latent state space service: layout construction, the state encoding and the
forward simulation of observed behavior.
"""
import logging
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from welfare_order import settings
from welfare_order.errors import DimensionError, InvalidInputError
from welfare_order.models.regimes import Horizon
from welfare_order.models.statespace import BitField, ResponseMaps, StateSpaceLayout
from welfare_order.schemas.reports import BitFieldSchema, LayoutSchema

logger = logging.getLogger(__name__)

STATE_CHUNK = 2**16


def _y_arguments(period: int, markov: bool) -> Tuple[str, ...]:
    if period == 1:
        return ("d1",)
    if markov:
        return (f"y{period - 1}", f"d{period}")
    return tuple(f"y{t}" for t in range(1, period)) + tuple(
        f"d{t}" for t in range(1, period + 1)
    )


def _d_arguments(period: int, markov: bool, instrumented: Sequence[bool]) -> Tuple[str, ...]:
    own_z = (f"z{period}",) if instrumented[period - 1] else ()
    if period == 1:
        return own_z
    if markov:
        return (f"y{period - 1}", f"d{period - 1}") + own_z
    return (
        tuple(f"y{t}" for t in range(1, period))
        + tuple(f"d{t}" for t in range(1, period))
        + tuple(f"z{t}" for t in range(1, period + 1) if instrumented[t - 1])
    )


def build_layout(horizon: Horizon, markov: bool, cap: Optional[int] = None) -> StateSpaceLayout:
    """build_layout
    Freeze the bit layout of the latent state space.

    Args:
        horizon (Horizon): Periods and instrument availability
        markov (bool): Whether period maps only see the previous period
        cap (int, optional): Maximal d_q. Defaults to settings.STATE_SPACE_CAP.

    Raises:
        DimensionError: d_q above the cap

    Returns:
        StateSpaceLayout: Layout with exact d_q
    """
    cap = settings.STATE_SPACE_CAP if cap is None else cap
    specs: List[Tuple[str, str, int, Tuple[str, ...]]] = []
    for t in range(1, horizon.periods + 1):
        specs.append((f"Y{t}", "Y", t, _y_arguments(t, markov)))
        specs.append((f"D{t}", "D", t, _d_arguments(t, markov, horizon.instrumented)))

    n_bits = sum(2 ** len(args) for _, _, _, args in specs)
    if 2**n_bits > cap:
        raise DimensionError(
            f"state space has 2^{n_bits} latent states, above the cap of {cap}; "
            "enable the Markov assumption (K), drop instruments, use lag1 regimes "
            "or raise STATE_SPACE_CAP"
        )

    fields = []
    position = 0
    for name, kind, period, args in specs:
        width = 2 ** len(args)
        fields.append(
            BitField(
                name=name,
                kind=kind,
                period=period,
                args=args,
                offset=n_bits - position - width,
            )
        )
        position += width

    layout = StateSpaceLayout(horizon=horizon, markov=bool(markov), fields=tuple(fields))
    logger.info(
        "Layout T=%d markov=%s instrumented=%s: d_q=%d",
        horizon.periods,
        markov,
        horizon.instrumented,
        layout.d_q,
    )
    return layout


def encode(maps: ResponseMaps, layout: StateSpaceLayout) -> int:
    """encode
    beta(.): response maps to latent state index.
    """
    state = 0
    for bit_field in layout.fields:
        for entry, value in enumerate(maps.values[bit_field.name]):
            if value:
                state |= 1 << bit_field.position(entry)
    return state


def decode(state: int, layout: StateSpaceLayout) -> ResponseMaps:
    """decode
    Inverse of encode.

    Raises:
        InvalidInputError: state outside 0..d_q-1
    """
    state = int(state)
    if not 0 <= state < layout.d_q:
        raise InvalidInputError(f"state {state} outside 0..{layout.d_q - 1}")
    values: Dict[str, Tuple[int, ...]] = {}
    for bit_field in layout.fields:
        values[bit_field.name] = tuple(
            (state >> bit_field.position(entry)) & 1 for entry in range(bit_field.width)
        )
    return ResponseMaps(layout=layout, values=values)


def field_values(states: np.ndarray, bit_field: BitField, entries) -> np.ndarray:
    """field_values
    Vectorized lookup of map entries: bit `entries` of `bit_field` for every state.
    """
    shifts = bit_field.offset + bit_field.width - 1 - np.asarray(entries, dtype=np.int64)
    return ((np.asarray(states, dtype=np.int64) >> shifts) & 1).astype(np.int8)


def grid_indices(bit_field: BitField, values: Dict[str, np.ndarray], size: int) -> np.ndarray:
    index = np.zeros(size, dtype=np.int64)
    for arg in bit_field.args:
        index = (index << 1) | values[arg].astype(np.int64)
    return index


def z_values(horizon: Horizon) -> List[Tuple[int, ...]]:
    """z_values
    Instrument assignments in lexicographic order; absent instruments stay 0.
    """
    return list(product(*[(0, 1) if flag else (0,) for flag in horizon.instrumented]))


def cell_labels(periods: int) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """(y, d) cells in lexicographic order of (y1..yT, d1..dT)."""
    return [
        (bits[:periods], bits[periods:]) for bits in product((0, 1), repeat=2 * periods)
    ]


def cell_indices(y: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Cell index of every row of (y, d), y1 most significant."""
    bits = np.hstack([np.asarray(y), np.asarray(d)]).astype(np.int64)
    index = np.zeros(bits.shape[0], dtype=np.int64)
    for column in range(bits.shape[1]):
        index = (index << 1) | bits[:, column]
    return index


def _check_z(z: Sequence[int], layout: StateSpaceLayout) -> Tuple[int, ...]:
    z = tuple(int(value) for value in z)
    if len(z) != layout.periods:
        raise InvalidInputError(f"z must have {layout.periods} coordinates, got {z}")
    for t, (value, flag) in enumerate(zip(z, layout.horizon.instrumented), start=1):
        if value not in (0, 1) or (not flag and value != 0):
            raise InvalidInputError(f"z{t}={value} is not a valid instrument value")
    return z


def observed_cells(
    states: np.ndarray, z: Sequence[int], layout: StateSpaceLayout
) -> Tuple[np.ndarray, np.ndarray]:
    """observed_cells
    Simulate the observed (y, d) path of many states under one instrument value.

    Args:
        states (np.ndarray): Encoded states
        z (Sequence[int]): Instrument assignment
        layout (StateSpaceLayout): Layout

    Returns:
        Tuple[np.ndarray, np.ndarray]: y and d, each of shape (n, T)
    """
    z = _check_z(z, layout)
    states = np.asarray(states, dtype=np.int64)
    size = states.shape[0]
    values = {f"z{t}": np.full(size, z[t - 1], dtype=np.int8) for t in range(1, layout.periods + 1)}
    y = np.zeros((size, layout.periods), dtype=np.int8)
    d = np.zeros((size, layout.periods), dtype=np.int8)
    for t in range(1, layout.periods + 1):
        d_field = layout.d_field(t)
        d[:, t - 1] = field_values(states, d_field, grid_indices(d_field, values, size))
        values[f"d{t}"] = d[:, t - 1]
        y_field = layout.y_field(t)
        y[:, t - 1] = field_values(states, y_field, grid_indices(y_field, values, size))
        values[f"y{t}"] = y[:, t - 1]
    return y, d


def observed_cell(
    state: int, z: Sequence[int], layout: StateSpaceLayout
) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """observed_cell
    The unique (y, d) cell state s produces under instrument value z.
    """
    if not 0 <= int(state) < layout.d_q:
        raise InvalidInputError(f"state {state} outside 0..{layout.d_q - 1}")
    y, d = observed_cells(np.array([state]), z, layout)
    return tuple(int(v) for v in y[0]), tuple(int(v) for v in d[0])


def state_chunks(d_q: int, chunk: int = STATE_CHUNK) -> Iterator[np.ndarray]:
    for start in range(0, d_q, chunk):
        yield np.arange(start, min(start + chunk, d_q), dtype=np.int64)


def layout_to_json(layout: StateSpaceLayout) -> LayoutSchema:
    """layout_to_json
    Audit description of the bit layout.
    """
    return LayoutSchema(
        periods=layout.periods,
        instrumented=list(layout.horizon.instrumented),
        markov=layout.markov,
        n_bits=layout.n_bits,
        d_q=layout.d_q,
        fields=[
            BitFieldSchema(
                name=bit_field.name,
                kind=bit_field.kind,
                period=bit_field.period,
                args=list(bit_field.args),
                offset=bit_field.offset,
                width=bit_field.width,
            )
            for bit_field in layout.fields
        ],
    )

"""
Regime service: enumeration, indexing, outcome paths and welfare oracles.
"""
import logging
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from welfare_order import settings
from welfare_order.errors import AmbiguityError, DimensionError, InvalidInputError
from welfare_order.models.regimes import (
    Adaptivity,
    Horizon,
    OutcomePath,
    Regime,
    StochasticRegime,
    WelfareSpec,
    history_keys,
    key_position,
)
from welfare_order.models.statespace import ResponseMaps, StateSpaceLayout
from welfare_order.utils.statespace import field_values, grid_indices

logger = logging.getLogger(__name__)


def _table_sizes(horizon: Horizon) -> List[int]:
    return [len(history_keys(t, horizon.adaptivity)) for t in range(1, horizon.periods + 1)]


def regime_count(horizon: Horizon) -> int:
    return 2 ** sum(_table_sizes(horizon))


def regime_from_index(index: int, horizon: Horizon) -> Regime:
    """regime_from_index
    Decode a 1-based regime index: bit i of k-1 is the i-th flat table entry.

    Raises:
        InvalidInputError: index outside 1..|K|
    """
    count = regime_count(horizon)
    if not 1 <= index <= count:
        raise InvalidInputError(f"regime index {index} outside 1..{count}")
    code = index - 1
    tables = []
    for size in _table_sizes(horizon):
        tables.append(tuple((code >> bit) & 1 for bit in range(size)))
        code >>= size
    return Regime(index=index, tables=tuple(tables), adaptivity=horizon.adaptivity)


def index_from_regime(regime: Regime) -> int:
    code = 0
    for bit, entry in enumerate(regime.flat):
        code |= entry << bit
    return code + 1


def enumerate_regimes(horizon: Horizon, cap: Optional[int] = None) -> List[Regime]:
    """enumerate_regimes
    All deterministic regimes of the horizon, in index order.

    Args:
        horizon (Horizon): Periods and adaptivity
        cap (int, optional): Maximal regime count. Defaults to settings.REGIME_CAP.

    Raises:
        DimensionError: Too many regimes

    Returns:
        List[Regime]: Regimes 1..|K|
    """
    cap = settings.REGIME_CAP if cap is None else cap
    count = regime_count(horizon)
    if count > cap:
        raise DimensionError(
            f"T={horizon.periods} ({horizon.adaptivity.value}) has {count} regimes, "
            f"above the cap of {cap}; use lag1 adaptivity or raise REGIME_CAP"
        )
    return [regime_from_index(k, horizon) for k in range(1, count + 1)]


def is_static(regime: Regime) -> bool:
    return all(len(set(table)) == 1 for table in regime.tables)


def evaluate_outcome_path(regime: Regime, maps: ResponseMaps) -> OutcomePath:
    """evaluate_outcome_path
    Bridge recursion: d_t from the regime, y_t from the outcome map.
    """
    if regime.periods != maps.layout.periods:
        raise InvalidInputError("regime and response maps have different horizons")
    y: List[int] = []
    d: List[int] = []
    for t in range(1, regime.periods + 1):
        d.append(regime.allocation(t, y))
        y.append(maps.y_value(t, y, d))
    return OutcomePath(y=tuple(y), d=tuple(d))


def _key_positions(
    period: int, values: Dict[str, np.ndarray], adaptivity: Adaptivity, size: int
) -> np.ndarray:
    if period == 1:
        return np.zeros(size, dtype=np.int64)
    if adaptivity is Adaptivity.LAG1:
        return 1 - values[f"y{period - 1}"].astype(np.int64)
    history = np.zeros(size, dtype=np.int64)
    for t in range(1, period):
        history = (history << 1) | values[f"y{t}"].astype(np.int64)
    return (2 ** (period - 1) - 1) - history


def regime_outcomes(regime: Regime, states: np.ndarray, layout: StateSpaceLayout) -> np.ndarray:
    """regime_outcomes
    Outcome paths of many states under one regime.

    Returns:
        np.ndarray: y of shape (n, T)
    """
    if regime.periods != layout.periods:
        raise InvalidInputError("regime and layout have different horizons")
    states = np.asarray(states, dtype=np.int64)
    size = states.shape[0]
    values: Dict[str, np.ndarray] = {}
    y = np.zeros((size, layout.periods), dtype=np.int8)
    for t in range(1, layout.periods + 1):
        table = np.asarray(regime.tables[t - 1], dtype=np.int8)
        values[f"d{t}"] = table[_key_positions(t, values, regime.adaptivity, size)]
        y_field = layout.y_field(t)
        y[:, t - 1] = field_values(states, y_field, grid_indices(y_field, values, size))
        values[f"y{t}"] = y[:, t - 1]
    return y


def check_simplex(q: np.ndarray, size: int, tol: float = 1e-8) -> np.ndarray:
    """check_simplex
    Validate a distribution over `size` states.

    Raises:
        InvalidInputError: wrong length, negative mass or total mass != 1
    """
    q = np.asarray(q, dtype=float).ravel()
    if q.shape[0] != size:
        raise InvalidInputError(f"q has {q.shape[0]} entries, expected {size}")
    if q.min() < -tol or abs(q.sum() - 1.0) > tol:
        raise InvalidInputError("q is not on the probability simplex")
    return q


def welfare_from_q(
    regime_index: int, q: np.ndarray, welfare_spec: WelfareSpec, layout: StateSpaceLayout
) -> float:
    """welfare_from_q
    W_k = sum_s q_s sum_t w_t y_t(path(k, s)).
    """
    q = check_simplex(q, layout.d_q)
    regime = regime_from_index(regime_index, layout.horizon)
    outcomes = regime_outcomes(regime, np.arange(layout.d_q), layout)
    return float(q @ (outcomes @ np.asarray(welfare_spec.weights)))


def regime_welfares(
    q: np.ndarray, welfare_spec: WelfareSpec, layout: StateSpaceLayout
) -> np.ndarray:
    """Welfare of every regime, regime k at position k-1."""
    q = check_simplex(q, layout.d_q)
    states = np.arange(layout.d_q)
    weights = np.asarray(welfare_spec.weights)
    return np.array(
        [
            float(q @ (regime_outcomes(regime, states, layout) @ weights))
            for regime in enumerate_regimes(layout.horizon)
        ]
    )


def optimal_regime_oracle(
    q: np.ndarray,
    welfare_spec: WelfareSpec,
    layout: StateSpaceLayout,
    tie: Optional[float] = None,
) -> int:
    """optimal_regime_oracle
    argmax_k A_k q by enumeration.

    Raises:
        AmbiguityError: several regimes within `tie` of the maximum

    Returns:
        int: Optimal regime index
    """
    tie = settings.EPS_TIE if tie is None else tie
    welfares = regime_welfares(q, welfare_spec, layout)
    best = welfares.max()
    tied = [k + 1 for k in np.flatnonzero(best - welfares <= tie)]
    if len(tied) > 1:
        raise AmbiguityError(f"regimes {tied} tie for the maximal welfare {best:.12g}", tied=tied)
    return int(tied[0])


class _BackwardInduction:
    """
    Memoized backward induction over (y^{t-1}, d^{t-1}) histories for terminal welfare.

    Branch values are unnormalized (sum of q over the conditioning event), which
    leaves the argmax of every branch unchanged.
    """

    def __init__(self, q: np.ndarray, layout: StateSpaceLayout, tie: float):
        self.q = q
        self.layout = layout
        self.tie = tie
        self.states = np.arange(layout.d_q, dtype=np.int64)
        self.memo: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], Tuple[float, int, bool, float]]
        self.memo = {}

    def _outcome(self, y_history: Tuple[int, ...], d_history: Tuple[int, ...]) -> np.ndarray:
        period = len(d_history)
        y_field = self.layout.y_field(period)
        arguments = {f"y{t}": value for t, value in enumerate(y_history, start=1)}
        arguments.update({f"d{t}": value for t, value in enumerate(d_history, start=1)})
        return field_values(self.states, y_field, y_field.grid_index(arguments))

    def node(self, y_history: Tuple[int, ...], d_history: Tuple[int, ...], active: np.ndarray):
        """(value, choice, tied, mass) at the period len(d_history)+1 decision."""
        key = (y_history, d_history)
        if key in self.memo:
            return self.memo[key]
        period = len(d_history) + 1
        candidates = []
        for d_t in (0, 1):
            outcome = self._outcome(y_history, d_history + (d_t,))
            if period == self.layout.periods:
                candidates.append(float(self.q[active & (outcome == 1)].sum()))
            else:
                candidates.append(
                    sum(
                        self.node(
                            y_history + (y_t,), d_history + (d_t,), active & (outcome == y_t)
                        )[0]
                        for y_t in (0, 1)
                    )
                )
        mass = float(self.q[active].sum())
        choice = 1 if candidates[1] > candidates[0] + self.tie else 0
        tied = abs(candidates[1] - candidates[0]) <= self.tie
        result = (max(candidates), choice, tied, mass)
        self.memo[key] = result
        return result

    def assemble(self, forced: Optional[Dict[Tuple[int, ...], int]] = None):
        """Regime tables following the branch choices; `forced` overrides a branch by y history."""
        forced = forced or {}
        adaptivity = self.layout.horizon.adaptivity
        tables = [
            [0] * len(history_keys(t, adaptivity)) for t in range(1, self.layout.periods + 1)
        ]
        ties: List[Tuple[int, ...]] = []
        unconstrained: List[Tuple[Tuple[int, ...], Tuple[int, ...]]] = []

        def visit(y_history, d_history, active):
            period = len(d_history) + 1
            _, choice, tied, mass = self.node(y_history, d_history, active)
            if mass <= 0.0:
                choice = 0
                unconstrained.append((y_history, d_history))
            elif tied and y_history not in forced:
                ties.append(y_history)
            choice = forced.get(y_history, choice)
            tables[period - 1][key_position(period, y_history, adaptivity)] = choice
            if period < self.layout.periods:
                outcome = self._outcome(y_history, d_history + (choice,))
                for y_t in (0, 1):
                    visit(y_history + (y_t,), d_history + (choice,), active & (outcome == y_t))

        visit((), (), np.ones(self.layout.d_q, dtype=bool))
        return tables, ties, unconstrained


def backward_induction_oracle(
    q: np.ndarray, layout: StateSpaceLayout, tie: Optional[float] = None
) -> int:
    """backward_induction_oracle
    Optimal regime for terminal welfare by backward induction.

    delta_T*(history) maximizes E[Y_T | history], earlier rules maximize the
    continuation value. Branches with zero probability are unconstrained and get
    allocation 0.

    Args:
        q (np.ndarray): Distribution over latent states
        layout (StateSpaceLayout): Layout (full adaptivity)
        tie (float, optional): Tie tolerance. Defaults to settings.EPS_TIE.

    Raises:
        AmbiguityError: a reachable branch is tied
        InvalidInputError: lag1 regimes

    Returns:
        int: Optimal regime index
    """
    if layout.horizon.adaptivity is not Adaptivity.FULL:
        raise InvalidInputError("backward induction requires fully adaptive regimes")
    tie = settings.EPS_TIE if tie is None else tie
    q = check_simplex(q, layout.d_q)
    induction = _BackwardInduction(q, layout, tie)
    tables, ties, unconstrained = induction.assemble()
    for y_history, d_history in unconstrained:
        logger.warning(
            "Branch y=%s d=%s has zero probability; rule unconstrained, set to 0",
            y_history,
            d_history,
        )
    regime = Regime(index=1, tables=tuple(tuple(table) for table in tables))
    index = index_from_regime(regime)
    if ties:
        tied = {index}
        for y_history in ties:
            period = len(y_history) + 1
            current = tables[period - 1][key_position(period, y_history, Adaptivity.FULL)]
            alternative, _, _ = induction.assemble(forced={y_history: 1 - current})
            alternative = tuple(tuple(table) for table in alternative)
            tied.add(index_from_regime(Regime(index=1, tables=alternative)))
        raise AmbiguityError(
            f"backward induction is tied at branches {ties}", tied=sorted(tied)
        )
    return index


def stochastic_welfare(
    stochastic_regime: StochasticRegime,
    q: np.ndarray,
    layout: StateSpaceLayout,
    welfare_spec: Optional[WelfareSpec] = None,
) -> float:
    """stochastic_welfare
    Welfare of a randomized regime, averaging over q and over the independent
    randomization of every rule.
    """
    if stochastic_regime.periods != layout.periods:
        raise InvalidInputError("stochastic regime and layout have different horizons")
    welfare_spec = welfare_spec or WelfareSpec.terminal(layout.periods)
    q = check_simplex(q, layout.d_q)
    states = np.arange(layout.d_q, dtype=np.int64)
    size = states.shape[0]
    total = np.zeros(size)
    for allocations in product((0, 1), repeat=layout.periods):
        probability = np.ones(size)
        welfare = np.zeros(size)
        values: Dict[str, np.ndarray] = {}
        for t, d_t in enumerate(allocations, start=1):
            table = np.asarray(stochastic_regime.tables[t - 1], dtype=float)
            treat = table[_key_positions(t, values, stochastic_regime.adaptivity, size)]
            probability *= treat if d_t else 1.0 - treat
            values[f"d{t}"] = np.full(size, d_t, dtype=np.int8)
            y_field = layout.y_field(t)
            values[f"y{t}"] = field_values(states, y_field, grid_indices(y_field, values, size))
            welfare += welfare_spec.weights[t - 1] * values[f"y{t}"]
        total += probability * welfare
    return float(q @ total)


def regime_labels(regimes: Sequence[Regime]) -> Tuple[str, ...]:
    return tuple(regime.label for regime in regimes)

"""
Simulation service: the two-period threshold process, its latent distribution
and synthetic samples.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional

import numpy as np
import pandas as pd

from welfare_order import settings
from welfare_order.errors import InvalidInputError
from welfare_order.models.data import EmpiricalDistribution, SyntheticSample
from welfare_order.models.matrices import ProblemMatrices
from welfare_order.models.regimes import Horizon
from welfare_order.models.statespace import StateSpaceLayout
from welfare_order.schemas.simulate import DGPConfig
from welfare_order.utils.dataset import column_names, distribution_from_q
from welfare_order.utils.statespace import observed_cells, z_values

logger = logging.getLogger(__name__)

DRAW_CHUNK = 50_000


def dgp_horizon(config: DGPConfig) -> Horizon:
    return Horizon(periods=2, instrumented=(True, config.z2_present))


def z_weights(config: DGPConfig, horizon: Horizon) -> np.ndarray:
    """Probability of every instrument value, in z_values order."""
    probs = (config.z1_prob, config.z2_prob)
    weights = []
    for z_value in z_values(horizon):
        weight = 1.0
        for t, value in enumerate(z_value):
            if horizon.instrumented[t]:
                weight *= probs[t] if value else 1.0 - probs[t]
        weights.append(weight)
    return np.asarray(weights)


def _draw_latents(
    config: DGPConfig, size: int, rng: np.random.Generator
) -> Dict[str, np.ndarray]:
    return {
        "alpha": rng.normal(0.0, config.sd_alpha, size),
        "v1": rng.normal(0.0, config.sd_v, size),
        "e1": rng.normal(0.0, config.sd_e, size),
        "v2": rng.normal(0.0, config.sd_v, size),
        "e2": rng.normal(0.0, config.sd_e, size),
    }


def _index(config: DGPConfig, name: str, values: Dict[str, int], latents) -> np.ndarray:
    alpha = latents["alpha"]
    if name == "D1":
        return config.pi_1 * values.get("z1", 0) + alpha + latents["v1"]
    if name == "Y1":
        return config.mu_1 * values["d1"] + alpha + latents["e1"]
    if name == "D2":
        return (
            config.pi_21 * values["y1"]
            + config.pi_22 * values["d1"]
            + config.pi_23 * values.get("z2", 0)
            + alpha
            + latents["v2"]
        )
    return config.mu_21 * values["y1"] + config.mu_22 * values["d2"] + alpha + latents["e2"]


def _encode_draws(config: DGPConfig, layout: StateSpaceLayout, latents) -> np.ndarray:
    size = latents["alpha"].shape[0]
    states = np.zeros(size, dtype=np.int64)
    for bit_field in layout.fields:
        for entry, grid_values in enumerate(bit_field.grid()):
            values = dict(zip(bit_field.args, grid_values))
            bit = _index(config, bit_field.name, values, latents) >= 0.0
            states |= bit.astype(np.int64) << bit_field.position(entry)
    return states


def true_q(
    config: DGPConfig,
    layout: StateSpaceLayout,
    n_draws: Optional[int] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """true_q
    Monte Carlo latent distribution: every draw of (alpha, v1, e1, v2, e2) fixes
    the full response maps, which are encoded and counted.

    Draw chunks use independent streams spawned from `seed` and are merged in
    chunk order, so the result does not depend on the thread count.

    Args:
        config (DGPConfig): Process parameters
        layout (StateSpaceLayout): A two-period layout
        n_draws (int, optional): Draws. Defaults to settings.MC_DRAWS.
        seed (int, optional): Seed. Defaults to settings.DEFAULT_SEED.

    Raises:
        InvalidInputError: layout is not two-period or its instruments differ

    Returns:
        np.ndarray: q over all d_q states
    """
    if layout.periods != 2:
        raise InvalidInputError("the threshold process has two periods")
    if layout.horizon.instrumented != dgp_horizon(config).instrumented:
        raise InvalidInputError(
            f"layout instruments {layout.horizon.instrumented} do not match the process"
        )
    n_draws = settings.MC_DRAWS if n_draws is None else int(n_draws)
    seed = settings.DEFAULT_SEED if seed is None else seed
    if n_draws < 1:
        raise InvalidInputError("need at least one draw")
    sizes = [DRAW_CHUNK] * (n_draws // DRAW_CHUNK)
    if n_draws % DRAW_CHUNK:
        sizes.append(n_draws % DRAW_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def count(task):
        size, stream = task
        latents = _draw_latents(config, size, np.random.default_rng(stream))
        return np.bincount(_encode_draws(config, layout, latents), minlength=layout.d_q)

    with ThreadPoolExecutor(max_workers=settings.LP_WORKERS) as pool:
        counts = sum(pool.map(count, zip(sizes, streams)))
    q = counts / n_draws
    logger.info(
        "Simulated %d draws: %d of %d states in the support",
        n_draws,
        int(np.count_nonzero(q)),
        layout.d_q,
    )
    return q


def sample_data(config: DGPConfig, n: int, seed: Optional[int] = None) -> SyntheticSample:
    """sample_data
    n i.i.d. units (y1, d1, z1, y2, d2, z2) from the process.
    """
    seed = settings.DEFAULT_SEED if seed is None else seed
    if n < 0:
        raise InvalidInputError("sample size must be non-negative")
    rng = np.random.default_rng(seed)
    latents = _draw_latents(config, n, rng)
    z1 = (rng.random(n) < config.z1_prob).astype(np.int8)
    z2 = (rng.random(n) < config.z2_prob).astype(np.int8)
    if not config.z2_present:
        z2 = np.zeros(n, dtype=np.int8)
    d1 = (_index(config, "D1", {"z1": z1}, latents) >= 0).astype(np.int8)
    y1 = (_index(config, "Y1", {"d1": d1}, latents) >= 0).astype(np.int8)
    d2 = (_index(config, "D2", {"y1": y1, "d1": d1, "z2": z2}, latents) >= 0).astype(np.int8)
    y2 = (_index(config, "Y2", {"y1": y1, "d2": d2}, latents) >= 0).astype(np.int8)
    columns = {"y1": y1, "d1": d1, "z1": z1, "y2": y2, "d2": d2, "z2": z2}
    frame = pd.DataFrame({name: columns[name] for name in column_names(2)})
    return SyntheticSample(frame=frame, horizon=dgp_horizon(config), seed=seed)


def exact_distribution(
    config: DGPConfig,
    layout: StateSpaceLayout,
    q: Optional[np.ndarray] = None,
    n_draws: Optional[int] = None,
    seed: Optional[int] = None,
) -> EmpiricalDistribution:
    """exact_distribution
    Population cell probabilities of the process (no sampling noise).
    """
    q = true_q(config, layout, n_draws, seed) if q is None else q
    return distribution_from_q(q, layout, z_weights(config, layout.horizon))


def exact_p(
    config: DGPConfig,
    layout: StateSpaceLayout,
    matrices: ProblemMatrices,
    q: Optional[np.ndarray] = None,
    n_draws: Optional[int] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """exact_p
    p = B q for the latent distribution of the process. States the mask of
    `matrices` excludes must carry no mass.
    """
    q = true_q(config, layout, n_draws, seed) if q is None else np.asarray(q, dtype=float)
    outside = np.delete(q, matrices.active_states).sum()
    if outside > 0:
        raise InvalidInputError(f"mass {outside:.3g} lies on states the mask excludes")
    return matrices.B.dot(q[matrices.active_states])


def sample_from_q(
    q: np.ndarray,
    layout: StateSpaceLayout,
    n: int,
    seed: Optional[int] = None,
    weights: Optional[np.ndarray] = None,
) -> SyntheticSample:
    """sample_from_q
    Draw units from any latent distribution: a state from q, an instrument value
    from `weights` (uniform by default), then the observed path.
    """
    seed = settings.DEFAULT_SEED if seed is None else seed
    values = np.asarray(z_values(layout.horizon), dtype=np.int8)
    if weights is None:
        weights = np.full(len(values), 1.0 / len(values))
    rng = np.random.default_rng(seed)
    q = np.asarray(q, dtype=float)
    states = rng.choice(layout.d_q, size=n, p=q / q.sum())
    blocks = rng.choice(len(values), size=n, p=np.asarray(weights) / np.sum(weights))
    periods = layout.periods
    y = np.zeros((n, periods), dtype=np.int8)
    d = np.zeros((n, periods), dtype=np.int8)
    for block, z_value in enumerate(values):
        rows = blocks == block
        y[rows], d[rows] = observed_cells(states[rows], z_value, layout)
    z = values[blocks] if n else np.zeros((0, periods), dtype=np.int8)
    frame = pd.DataFrame(
        {
            name: (y if name[0] == "y" else d if name[0] == "d" else z)[:, int(name[1:]) - 1]
            for name in column_names(periods)
        }
    )
    return SyntheticSample(frame=frame, horizon=layout.horizon, seed=seed)


def write_sample(sample: SyntheticSample, path):
    sample.frame.to_csv(path, index=False)

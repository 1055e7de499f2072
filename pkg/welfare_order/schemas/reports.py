"""
Report schemas: layout audit, observed distributions, ordering and inference
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, validator

# Due to pydantic validators:
# pylint: disable=no-self-argument
# Due to pydantic Config class:
# pylint: disable=too-few-public-methods
# pylint: disable=missing-class-docstring

SCHEMA_VERSION = "1.0"


class BitFieldSchema(BaseModel):
    """
    One counterfactual map in the state bit layout
    """

    name: str
    kind: str
    period: int
    args: List[str]
    offset: int
    width: int


class LayoutSchema(BaseModel):
    """
    Return response data
    """

    periods: int
    instrumented: List[bool]
    markov: bool
    n_bits: int
    d_q: int
    fields: List[BitFieldSchema]


class DistributionSchema(BaseModel):
    """
    Cell probabilities of (y, d) given z, as stored on disk
    """

    schema_version: str = SCHEMA_VERSION
    periods: int
    instrumented: List[bool]
    z_values: List[List[int]]
    probabilities: List[List[float]]
    z_weights: List[float]
    z_counts: Optional[List[int]] = None
    cell_counts: Optional[List[List[int]]] = None

    @validator("probabilities")
    def blocks_are_distributions(cls, value):
        """
        Every z block must be a probability vector
        """
        for row in value:
            if any(entry < -1e-12 for entry in row) or abs(sum(row) - 1.0) > 1e-6:
                raise ValueError("every z block must be non-negative and sum to one")
        return value


class RegimeSchema(BaseModel):
    """
    Return response data
    """

    index: int
    label: str
    tables: List[List[int]]
    static: bool


class RegimeBoundsSchema(BaseModel):
    """
    Sharp welfare bounds of one regime
    """

    regime: int
    lower: float
    upper: float
    regret_lower: float
    regret_upper: float


class AdaptivityGainSchema(BaseModel):
    """
    Bounds on what an adaptive regime gains over the best static regime
    """

    regime: int
    lower: float
    upper: float


class EliminationStepSchema(BaseModel):
    remaining: List[int]
    statistic: float
    critical_value: float
    rejected: bool
    eliminated: int = 0


class InferenceReport(BaseModel):
    """
    Confidence set for the identified set
    """

    alpha: float
    mode: str
    bootstrap_reps: int
    seed: int
    noiseless: bool
    survivors: List[int]
    steps: List[EliminationStepSchema]


class OrderingReport(BaseModel):
    """
    Full result of one ordering run
    """

    schema_version: str = SCHEMA_VERSION
    periods: int
    markov: bool
    adaptivity: str
    assumptions: List[str]
    d_q: int
    d_q_active: int
    d_p: int
    data_rank: int
    n_regimes: int
    solver: str
    lp_count: int
    epsilon: float
    feasibility_gap: float
    projected: bool = False
    observed_welfare: float
    directions: Dict[str, str] = {}
    certified_pairs: List[List[int]] = []
    regimes: List[RegimeSchema]
    lower: List[List[float]]
    upper: List[List[float]]
    edges: List[List[int]]
    identified_set: List[int]
    tiers: List[List[int]]
    sorts: List[List[int]]
    sorts_truncated: bool
    sort_count: Optional[int] = None
    paths: List[List[int]] = []
    welfare_bounds: List[RegimeBoundsSchema] = []
    adaptivity_gain: List[AdaptivityGainSchema] = []
    transitivity_violations: List[List[int]] = []
    inference: Optional[InferenceReport] = None

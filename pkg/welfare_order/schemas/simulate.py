"""
Two-period threshold data-generating process schema
"""
from typing import Dict

from pydantic import BaseModel, validator

# Due to pydantic validators:
# pylint: disable=no-self-argument
# Due to pydantic Config class:
# pylint: disable=too-few-public-methods
# pylint: disable=missing-class-docstring


class DGPConfig(BaseModel):
    """
    D1 = 1{pi_1 Z1 + a + v1 >= 0}
    Y1 = 1{mu_1 D1 + a + e1 >= 0}
    D2 = 1{pi_21 Y1 + pi_22 D1 + pi_23 Z2 + a + v2 >= 0}
    Y2 = 1{mu_21 Y1 + mu_22 D2 + a + e2 >= 0}

    a, v1, e1, v2, e2 independent centered normals; Z1, Z2 independent Bernoulli.
    """

    pi_1: float = 0.5
    mu_1: float = 0.5
    pi_21: float = 0.5
    pi_22: float = 0.5
    pi_23: float = 0.5
    mu_21: float = 0.5
    mu_22: float = 0.5
    sd_alpha: float = 1.0
    sd_v: float = 1.0
    sd_e: float = 1.0
    z1_prob: float = 0.5
    z2_prob: float = 0.5
    z2_present: bool = True

    class Config:
        allow_mutation = False

    @validator("sd_alpha", "sd_v", "sd_e")
    def positive_scale(cls, value):
        """
        Standard deviations must be positive
        """
        if not value > 0:
            raise ValueError("standard deviations must be positive")
        return value

    @validator("z1_prob", "z2_prob")
    def open_unit_interval(cls, value):
        """
        Instrument probabilities must lie in (0, 1)
        """
        if not 0 < value < 1:
            raise ValueError("instrument probabilities must lie in (0, 1)")
        return value


PRESETS: Dict[str, DGPConfig] = {
    "positive": DGPConfig(),
    "neg-mu22": DGPConfig(mu_22=-0.5),
    "no-z2": DGPConfig(z2_present=False),
}

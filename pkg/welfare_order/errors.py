"""
Error hierarchy shared by the library, the CLI and the HTTP routers.

Every error carries the exit code the CLI terminates with.
"""
from typing import Sequence


class WelfareOrderError(Exception):
    """Base error of the package."""

    exit_code = 1


class InvalidInputError(WelfareOrderError):
    """Malformed arguments (bad indices, probabilities or vectors)."""

    exit_code = 2


class ModelRefutedError(WelfareOrderError):
    """The observed distribution is incompatible with the maintained model."""

    exit_code = 3


class ContradictionError(ModelRefutedError):
    """The identifying assumptions exclude every latent state."""


class DimensionError(WelfareOrderError):
    """A configured size cap was exceeded."""

    exit_code = 4


class InsufficientDataError(WelfareOrderError):
    """A conditioning cell or instrument value has too few observations."""

    exit_code = 5


class AmbiguityError(WelfareOrderError):
    """An argmax over regimes is not unique."""

    exit_code = 6

    def __init__(self, message: str, tied: Sequence[int] = ()):
        super().__init__(message)
        self.tied = tuple(tied)


class ConsistencyError(WelfareOrderError):
    """Internal numerical contradiction, e.g. a cycle in the welfare order."""

    exit_code = 7

    def __init__(self, message: str, cycle: Sequence[int] = ()):
        super().__init__(message)
        self.cycle = tuple(cycle)


class NumericFailureError(WelfareOrderError):
    """The LP backend failed to reach a certified optimum."""

    exit_code = 8

"""Exception types shared across the toolkit."""

from __future__ import annotations


class TgPoisonError(Exception):
    """Base class for all toolkit errors."""


class MalformedStreamError(TgPoisonError):
    """Raised when an edge stream cannot be parsed.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedStrategyError(TgPoisonError):
    """Raised when a strategy is not applicable to the given graph."""


class TimelineMismatchError(TgPoisonError):
    """Raised when a score timeline does not belong to the given graph."""


class InfeasibleSamplingError(TgPoisonError):
    """Raised when the insertion budget cannot be met.

    Attributes:
        partial_plan: the insertions produced before starvation.
        diagnosis: name of the constraint that starved the candidate pool.
    """

    def __init__(self, message: str, partial_plan=None, diagnosis: str | None = None):
        super().__init__(message)
        self.partial_plan = partial_plan
        self.diagnosis = diagnosis


class PlanMismatchError(TgPoisonError):
    """Raised when a removal or insertion plan is inconsistent with a graph."""

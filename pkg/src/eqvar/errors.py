"""Exception hierarchy shared by all eqvar modules."""

from __future__ import annotations


class EqvarError(ValueError):
    """Base class for every error raised by eqvar."""


class CyclicGraph(EqvarError):
    pass


class NonZeroDiagonal(EqvarError):
    pass


class LengthMismatch(EqvarError):
    pass


class SizeMismatch(EqvarError):
    pass


class NonPositiveScale(EqvarError):
    pass


class TooFewRows(EqvarError):
    pass


class SingularConditioningSet(EqvarError):
    """A conditioning covariance block is numerically singular."""


class CombinatorialBlowup(EqvarError):
    pass


class NoConvergence(EqvarError):
    pass


class AllTied(EqvarError):
    pass


class Exhausted(EqvarError):
    """An ordering run could not place every variable.

    The variables placed before the failure are kept on the exception so
    callers can report how far the run got (typically the p > n regime).
    """

    def __init__(self, step: int, sequence, step_criteria, step_subsets):
        self.step = step
        self.sequence = tuple(sequence)
        self.step_criteria = tuple(step_criteria)
        self.step_subsets = tuple(tuple(s) for s in step_subsets)
        super().__init__(
            f"conditioning set became singular at step {step}; "
            f"{len(self.sequence)} variables ordered"
        )

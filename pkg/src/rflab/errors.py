"""Exception types shared by every rflab module.

The CLI maps these onto its exit codes, so each class corresponds to one
failure category rather than to one call site.
"""


class RflabError(Exception):
    """Base class for all rflab errors."""


class ArgumentError(RflabError, ValueError):
    """An input violates an operation's documented precondition."""


class PreconditionError(ArgumentError):
    """A mathematical precondition (norm bound, admissibility) fails."""


class DegenerateInputError(ArgumentError):
    """The input is degenerate (all-zero coefficients, empty set, ...)."""


class NumericError(RflabError, ArithmeticError):
    """An iterative method failed to converge.

    ``trace`` carries whatever refinement history the failing routine had
    accumulated, so callers can report it.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class InfiniteRatio(RflabError, ArithmeticError):
    """A ratio has an exactly zero denominator (not a floating overflow)."""


class ThresholdViolation(NumericError):
    """A covering claim needs more intervals than allowed at the configured constant."""

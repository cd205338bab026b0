"""Exception hierarchy.

Validation-type errors derive from ``ValueError`` so callers that only care
about bad input can catch the builtin.
"""


class ScrError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(ScrError, ValueError):
    pass


class ValidationError(ScrError, ValueError):
    pass


class ParseError(ScrError, ValueError):
    pass


class ComputationError(ScrError, RuntimeError):
    """Numerical failure (instability, non-convergence)."""


class UnstableCircuitError(ComputationError):
    pass


class UnstableCouplingError(ComputationError):
    pass


class SingularityError(ComputationError):
    pass


class NearResonanceError(ComputationError):
    pass


class NoResonanceError(ComputationError):
    pass


class ConvergenceError(ComputationError):
    """Raised when an iterative solver fails; ``best`` holds the best-so-far result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best

"""Exception types shared across the package."""


class RangePolymerError(Exception):
    """Base class for errors raised by this package."""


class DomainError(RangePolymerError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class SolverError(RangePolymerError, ArithmeticError):
    """A root solve failed; the message carries the diagnostic bracket."""


class ResourceCapError(RangePolymerError, ValueError):
    """A size parameter exceeds the configured cap for exact computation."""

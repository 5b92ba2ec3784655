"""Exception types raised by comprat."""


class ComposError(Exception):
    """Base class for library errors."""


class DomainError(ComposError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SingularityError(ComposError, ZeroDivisionError):
    """An intermediate denominator vanished during evaluation."""


class ExpansionCapError(ComposError):
    """Explicit expansion would exceed the configured degree cap."""


class ConvergenceError(ComposError):
    """An iterative search failed to bracket or converge."""


class PrecisionInsufficientError(ComposError):
    """The working precision cannot resolve the requested quantity."""


class SolveError(ComposError):
    """A linear solve hit a numerically singular matrix."""

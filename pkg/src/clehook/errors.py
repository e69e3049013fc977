"""Exception types shared across the package."""


class ClehookError(Exception):
    """Base class for all package errors."""


class DomainError(ClehookError):
    """An argument lies outside the mathematical domain of the operation."""


class ParameterError(ClehookError):
    """A parameter combination is degenerate (e.g. a Gamma-function pole)."""


class AccuracyLossError(ClehookError):
    """A series or iteration could not reach the requested accuracy."""


class NumericError(ClehookError):
    """A numerical routine failed to converge to tolerance."""


class ResourceError(ClehookError):
    """The requested computation exceeds the configured resource caps."""


class NonTerminationError(ClehookError):
    """A stochastic simulation exceeded its hard step cap."""


class StatisticsError(ClehookError):
    """Not enough data to form the requested estimate."""

"""Exception hierarchy shared by every module."""


class PeriodBalanceError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PeriodBalanceError, ValueError):
    """Malformed potential spec, grid spec or config entry."""


class DomainError(PeriodBalanceError, ValueError):
    """Argument outside the domain of the operation."""


class EnergyRangeError(DomainError):
    """The level set {F = h} misses one side of the origin."""


class AnnulusError(DomainError):
    """Amplitude is not inside the period annulus of the origin."""


class UnsupportedError(PeriodBalanceError):
    """Operation not defined for this potential family."""


class ConvergenceError(PeriodBalanceError, ArithmeticError):
    """An iterative method failed to reach its tolerance."""

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class NoRealSolutionError(PeriodBalanceError, ArithmeticError):
    """A closed-form approximation has no real value at this amplitude."""


class ConsistencyError(PeriodBalanceError, AssertionError):
    """Exact computation disagreed with an expected identity."""


class IllConditionedError(PeriodBalanceError, ValueError):
    """Data too narrow to support the requested fit."""

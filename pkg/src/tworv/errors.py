"""Exception hierarchy shared by every module."""


class TworvError(Exception):
    """Base class for all library errors."""


class ParameterError(TworvError, ValueError):
    """A parameter lies outside its documented box."""


class DomainError(TworvError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class NumericalError(TworvError, ArithmeticError):
    """An iterative or quadrature routine failed to converge."""


class BranchError(NumericalError):
    """A physically real quantity kept a non-negligible imaginary part."""


class ConsistencyError(NumericalError):
    """Closed form and quadrature disagree beyond tolerance."""


class FitError(TworvError, RuntimeError):
    """Moment matching could not produce a usable estimate."""


class InfeasibleCandidateError(FitError):
    """A candidate makes the implied variance of U non-positive."""

"""Exception and warning types raised across the package."""


class PetzLyapError(Exception):
    """Base class for all package errors."""


class NotHermitian(PetzLyapError, ValueError):
    pass


class NoConvergence(PetzLyapError, RuntimeError):
    pass


class DomainViolation(PetzLyapError, ValueError):
    pass


class SingularRho(PetzLyapError, ValueError):
    """A matrix that must be positive definite is not (within tolerance)."""


class SingularState(SingularRho):
    pass


class SupportMismatch(PetzLyapError, ValueError):
    pass


class InvalidDimension(PetzLyapError, ValueError):
    pass


class DimensionMismatch(PetzLyapError, ValueError):
    pass


class PositivityLost(PetzLyapError, RuntimeError):
    """Raised when an integrated state drifts out of the PSD cone."""


class NonUniqueKernel(PetzLyapError, RuntimeError):
    pass


class NoSteadyState(PetzLyapError, RuntimeError):
    pass


class NonIntegrable(PetzLyapError, ValueError):
    pass


class ConfigError(PetzLyapError, ValueError):
    pass


class TruncationWarning(UserWarning):
    """Fock-space truncation is too tight for the requested amplitude."""

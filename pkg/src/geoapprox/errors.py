"""Exception types raised across the package."""


class GeoApproxError(Exception):
    """Base class for all package errors."""


class InvalidDistribution(GeoApproxError, ValueError):
    """Input does not describe a valid probability mass function."""


class TruncationError(GeoApproxError):
    """Tail mass exceeds the allowed truncation budget."""


class SupportCapError(GeoApproxError):
    """A result would exceed the hard cap on support size."""


class BoundViolation(GeoApproxError, AssertionError):
    """An explicit-constant inequality failed on exactly computed values."""

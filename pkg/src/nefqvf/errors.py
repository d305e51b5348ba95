"""Semantic exception hierarchy shared across the package."""


class NefqvfError(Exception):
    """Base error for this package."""


class DomainError(NefqvfError, ValueError):
    """An argument lies outside the valid mean/natural-parameter domain."""


class DegenerateDegreeError(NefqvfError, ValueError):
    """A polynomial degree was requested past the point where the basis stops."""


class CapExceededError(NefqvfError):
    """An exact enumeration would exceed its documented size cap."""


class NumericInstabilityError(NefqvfError, FloatingPointError):
    """A verified numerical identity failed beyond tolerance."""


class ConfigError(NefqvfError, ValueError):
    """A CLI/config input failed validation; the message names the offending key."""

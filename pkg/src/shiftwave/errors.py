"""Exception hierarchy shared by every shiftwave module."""

from __future__ import annotations


class ShiftwaveError(Exception):
    """Base class for all errors raised by shiftwave."""


class ModelError(ShiftwaveError, ValueError):
    """Invalid model data: parameters, kernels or habitat profiles."""


class RegimeError(ShiftwaveError, ValueError):
    """The requested construction does not exist for these parameters."""


class UndefinedSpeedError(ShiftwaveError, ValueError):
    """A spreading speed was requested for a nonpositive linear rate."""

    def __init__(self, rate: float, message: str | None = None):
        self.rate = rate
        self.sign = "zero" if rate == 0 else "negative"
        super().__init__(message or f"rate nonpositive ({self.sign}: {rate!r})")


class OverflowGuardError(ShiftwaveError, OverflowError):
    """Exponential moment evaluated beyond |lambda| * tau = 700."""


class IntegrationError(ShiftwaveError, RuntimeError):
    """Time integration produced non-finite values or left the invariant box."""

    def __init__(self, message: str, last_valid_time: float | None = None):
        self.last_valid_time = last_valid_time
        super().__init__(message)


class ConfigError(ShiftwaveError, ValueError):
    """Malformed or semantically invalid scenario configuration."""

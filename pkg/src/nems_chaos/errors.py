"""Exception hierarchy shared by all modules."""


class NemsChaosError(Exception):
    """Base class for every error raised by this package."""


class DomainError(NemsChaosError, ValueError):
    """An input lies outside the domain of an operation (NaN, negative action, ...)."""


class NumericalFailure(NemsChaosError, ArithmeticError):
    """A numerical monitor (norm drift, unitarity) exceeded its tolerance."""


class UnsupportedMode(NemsChaosError, NotImplementedError):
    """The requested closed form is not valid for the given parameters."""


class IdentityViolation(NumericalFailure):
    """Two routes to the same analytic quantity disagree beyond tolerance."""


class ConfigError(NemsChaosError, ValueError):
    """Invalid run configuration. The message always names the offending key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")

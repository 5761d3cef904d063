"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters: grid sizes, exponents, config-file keys or values."""


class DomainError(ValueError):
    """An operation was called outside the regime where it is meaningful.

    ``code`` is a short machine-readable tag such as ``"CHIRP_UNRESOLVED"``.
    """

    def __init__(self, message: str, code: str = "DOMAIN"):
        super().__init__(message)
        self.code = code


class SimulationError(FloatingPointError):
    """Non-finite values appeared in the state during time stepping."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class AccuracyWarning(UserWarning):
    """A numerical result is returned but may not meet its accuracy budget."""

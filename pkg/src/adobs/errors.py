"""Exception hierarchy shared by the adaptive-observer modules."""


class AdobsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(AdobsError, ValueError):
    """Matrix or vector shapes do not fit the requested operation."""


class ContractError(AdobsError, ValueError):
    """An input violates a documented precondition (e.g. asymmetry)."""


class DegenerateParameterError(AdobsError, ValueError):
    """Physical parameters outside the identifiable region."""


class ConfigurationError(AdobsError, ValueError):
    """A configuration value violates its invariant.

    ``key`` names the offending setting when known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ConfigParseError(ConfigurationError):
    """Malformed configuration text; ``line`` is 1-based."""

    def __init__(self, message, line=None, key=None):
        super().__init__(message, key=key)
        self.line = line


class IntegrationError(AdobsError, RuntimeError):
    """Non-finite value produced during a step starting at time ``t``."""

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


class DivergenceError(IntegrationError):
    """Observer state left the admissible envelope."""

"""Exception hierarchy shared by every module."""


class FixpointError(Exception):
    """Base class for all library errors."""


class DimensionError(FixpointError, ValueError):
    """Points or domains of mismatched dimension were combined."""


class DomainError(FixpointError, ValueError):
    """A point lies outside the domain it is evaluated on, or a weight leaves [0, 1)."""


class ParamError(FixpointError, ValueError):
    """A numeric parameter is outside its admissible range."""


class NonFiniteError(FixpointError, ArithmeticError):
    """An iterate acquired a NaN or infinite coordinate."""


class NoConvergenceError(FixpointError, RuntimeError):
    """An iteration exhausted max_iter without meeting its stopping rule.

    The traces that failed are attached so callers can report diagnostics.
    """

    def __init__(self, message, traces=()):
        super().__init__(message)
        self.traces = tuple(traces)


class ConfigError(FixpointError):
    """Base class for experiment-config problems; carries every error found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ParseError(ConfigError):
    """The config text is malformed or does not match the schema."""


class ValidationError(ConfigError):
    """The config is well formed but violates a cross-field constraint."""

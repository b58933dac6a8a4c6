"""Exception types shared across the package."""


class PamonError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(PamonError, ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(PamonError, ValueError):
    """A configuration object is internally inconsistent (e.g. Nyquist violation)."""


class OrderingError(PamonError, ValueError):
    """A streamed sample arrived out of time order."""


class InsufficientDataError(PamonError, ValueError):
    """Not enough samples to perform the requested computation."""


class StateError(PamonError, RuntimeError):
    """An operation was attempted in a session state that does not allow it."""

    def __init__(self, message: str, code: str = "invalid-state"):
        super().__init__(message)
        self.code = code


class NotFoundError(PamonError, KeyError):
    """A named resource (scenario, session) does not exist."""


class ParseError(PamonError, ValueError):
    """A session file or wire message could not be parsed.

    ``line_number`` is 1-based; ``last_valid_line`` points at the last line
    that parsed cleanly (0 if none did).
    """

    def __init__(self, message: str, line_number: int, last_valid_line: int = 0):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
        self.last_valid_line = last_valid_line

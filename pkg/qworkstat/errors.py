"""
Exception hierarchy for qworkstat.

Every error raised by the library derives from QworkstatError so the CLI can map
it onto an exit code (see api.handle_json_command).
"""


class QworkstatError(Exception):
    """Base class for all qworkstat errors."""


class ArgumentError(QworkstatError, ValueError):
    """Raised when an operation receives an argument outside its domain."""


class NumericalError(QworkstatError, ArithmeticError):
    """Raised when a numerical routine fails or meets a singular quantity."""


class CapacityError(QworkstatError):
    """Raised when a register exceeds the dense-simulation limit."""


class ConfigError(QworkstatError):
    """Raised for invalid or unreadable configuration."""


class DiagnosticError(QworkstatError):
    """Raised when a root search cannot be trusted.

    Carries the sampled curve so callers can report what was seen."""

    def __init__(self, message: str, endpoints: tuple = (), curve: tuple = ()):
        super().__init__(message)
        self.endpoints = endpoints
        self.curve = curve


class StageError(QworkstatError):
    """Wraps an error raised inside a named scenario stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def exit_code_for(error: BaseException) -> tuple[str, int]:
    """Map an exception onto (error code, process exit code)."""
    if isinstance(error, StageError):
        return exit_code_for(error.cause)
    if isinstance(error, ConfigError):
        return "CONFIG", 2
    if isinstance(error, (NumericalError, DiagnosticError, CapacityError)):
        return ("DIAGNOSTIC" if isinstance(error, DiagnosticError) else "NUMERICAL"), 3
    return "INTERNAL", 1

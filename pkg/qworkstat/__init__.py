"""qworkstat: quantum work statistics by interferometric emulation."""

from .version import __version__
from .errors import (ArgumentError, CapacityError, ConfigError, DiagnosticError, NumericalError, QworkstatError,
                     StageError)

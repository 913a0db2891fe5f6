"""Exception hierarchy shared across the package.

The CLI maps each family onto a process exit code (see ``trajflow.cli``).
"""


class TrajflowError(Exception):
    """Base class for all package errors."""


class ConfigError(TrajflowError, ValueError):
    """Invalid configuration or request parameters."""


class DomainError(ConfigError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(TrajflowError, ValueError):
    """Array shapes are inconsistent for a primitive."""


class UsageError(TrajflowError, RuntimeError):
    """API used in an unsupported order or manner."""


class NonFiniteError(TrajflowError, ArithmeticError):
    """A NaN or infinity appeared where finite values are required."""


class DataError(TrajflowError, ValueError):
    """Input data is malformed."""


class SchemaError(DataError):
    """Input file does not follow the documented schema."""


class GenerationError(DataError):
    """A synthetic generator could not satisfy its constraints."""


class ChecksumError(DataError):
    """A persisted file failed its integrity check."""


class IoError(TrajflowError, OSError):
    """Output location cannot be written."""


class TrainingError(NonFiniteError):
    """Training diverged.

    Carries the failing step and the path of the last good checkpoint
    (``None`` when no checkpoint had been written yet).
    """

    def __init__(self, message, step, last_checkpoint=None):
        super().__init__(message)
        self.step = step
        self.last_checkpoint = last_checkpoint

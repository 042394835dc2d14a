"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class BudgetExceeded(ValueError):
    """An enumeration or kernel computation would exceed its size budget."""


class FormatError(ValueError):
    """A file (image, checkpoint) is malformed or truncated."""


class VersionError(FormatError):
    """A checkpoint was written by an incompatible format version."""


class ConfigError(ValueError):
    """A run configuration is invalid.

    ``line`` is the 1-based line of the offending entry when the error comes
    from a config file, otherwise ``None``.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrainingDiverged(RuntimeError):
    """Loss became NaN or infinite during training."""

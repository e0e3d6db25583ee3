"""Exception hierarchy shared by every flowsentinel subsystem."""


class FlowSentinelError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(FlowSentinelError):
    """Array shapes are inconsistent with a layer or operation contract."""


class MissingCacheError(FlowSentinelError):
    """backward() was called without a preceding forward() on the same layer."""


class EmptySequenceError(FlowSentinelError):
    """A recurrent layer received a zero-length sequence."""


class InvalidRateError(FlowSentinelError):
    """Dropout rate outside [0, 1)."""


class InvalidLabelError(FlowSentinelError):
    """A binary target was not 0 or 1."""


class IndexOutOfRangeError(FlowSentinelError):
    """A class index fell outside [0, n_classes)."""


class NonFiniteGradientError(FlowSentinelError):
    """The optimizer saw a NaN or Inf gradient."""


class NonFiniteLossError(FlowSentinelError):
    """Training produced a NaN or Inf loss value."""


class EmptyInputError(FlowSentinelError):
    """An operation that requires at least one row received none."""


class MissingColumnError(FlowSentinelError):
    """A required CSV column is absent from the header."""

    def __init__(self, column: str, path: str = ""):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")


class UnknownLabelError(FlowSentinelError):
    """A raw label string has no class assignment in strict mode."""


class ClassTooSmallError(FlowSentinelError):
    """A class has fewer than two rows, so it cannot be split."""


class KTooLargeError(FlowSentinelError):
    """Requested more top features than exist."""


class InvalidSpecError(FlowSentinelError):
    """A model specification is internally inconsistent."""


class ModeMismatchError(FlowSentinelError):
    """Model classification mode and dataset classification mode disagree."""


class CorruptModelError(FlowSentinelError):
    """A model file failed its magic, version, or checksum validation."""


class CorruptCacheError(FlowSentinelError):
    """A dataset cache file failed its magic, version, or size validation."""


class ConfigError(FlowSentinelError):
    """A run configuration value violates its constraints."""

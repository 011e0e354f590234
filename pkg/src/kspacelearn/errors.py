"""Typed errors raised across the package."""


class KspaceLearnError(Exception):
    """Base class for all package errors."""


class DimensionError(KspaceLearnError, ValueError):
    """Invalid or mismatched array dimensions."""


class DomainError(KspaceLearnError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(KspaceLearnError, ValueError):
    """Invalid configuration value or unparseable config file."""


class DivergenceError(KspaceLearnError, RuntimeError):
    """An iterative solver produced a non-finite iterate."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ConvergenceError(KspaceLearnError, RuntimeError):
    """An iterative solver hit its iteration budget before reaching tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SpdViolationError(KspaceLearnError, RuntimeError):
    """A linear operator assumed symmetric positive definite was not."""


class OptimizerError(KspaceLearnError, RuntimeError):
    """The outer optimizer failed; carries the last good iterate."""

    def __init__(self, message, last_iterate=None, history=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.history = history


class FileFormatError(KspaceLearnError, ValueError):
    """Malformed file contents (base class for reader errors)."""


class BadMagicError(FileFormatError):
    """File does not start with the expected magic bytes."""


class TruncatedFileError(FileFormatError):
    """Payload shorter than the header promises."""


class NonFiniteDataError(FileFormatError):
    """Stored values contain NaN or Inf."""


class RangeError(FileFormatError):
    """Stored values violate a documented range invariant."""


class DegeneratePatternError(KspaceLearnError, ValueError):
    """A sampling pattern is unusable (e.g. all-zero after thresholding)."""

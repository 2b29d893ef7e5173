"""Exception types shared across the package."""


class MaskSizerError(Exception):
    """Base class for all package errors."""


class FormatError(MaskSizerError):
    """Malformed image payload (bad magic, header field, or truncation)."""


class GeometryError(MaskSizerError):
    """Region or dimension outside the valid image geometry."""


class ValidationError(MaskSizerError):
    """Manifest or annotation violates a schema rule."""


class ShapeError(MaskSizerError):
    """Array dimensions do not match the network contract."""


class NumericError(MaskSizerError):
    """Non-finite values where finite numbers are required."""


class TrainingError(MaskSizerError):
    """Training diverged or could not proceed."""


class GenerationError(MaskSizerError):
    """A synthetic sample could not be constructed with the given geometry."""

"""Errors raised while building mixed batches."""


class MixingError(ValueError):
    """Base class for invalid mixing inputs."""


class ShapeMismatchError(MixingError):
    """The two inputs of a mix have different shapes."""


class NotGridError(MixingError):
    """Cut mixing needs (..., H, W, C) grid inputs."""


class LabelIndexError(MixingError):
    """A class index falls outside 0..K-1, or a soft label is not a distribution."""

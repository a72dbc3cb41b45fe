"""Errors raised while turning logits into detector scores."""


class DetectorError(ValueError):
    """Base class for scoring failures."""


class NonFiniteLogitsError(DetectorError):
    """Logits contain NaN or infinite entries."""


class DimensionMismatchError(DetectorError):
    """Logits have the wrong shape or class count."""

    def __init__(self, message: str, record_id: str | None = None):
        super().__init__(message)
        self.record_id = record_id


class MissingLogitsError(DetectorError):
    """A record handed to a detector carries no logits."""

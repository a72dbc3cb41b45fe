"""Errors raised while computing ROC metrics and reports."""


class MetricError(ValueError):
    """Base class for metric failures."""


class UndefinedMetricError(MetricError):
    """A metric was asked for on an empty positive or negative set."""


class MissingMembershipError(MetricError):
    """A report needs a membership group (ID, semantic or true OOD) that has no records."""


class UnscoredRecordError(MetricError):
    """A record reached a report without a score."""

    def __init__(self, message: str, record_id: str | None = None):
        super().__init__(message)
        self.record_id = record_id

"""Errors raised while evaluating training objectives."""


class LossError(ValueError):
    """Base class for invalid loss inputs."""


class TargetShapeError(LossError):
    """Logits and targets disagree in shape."""


class TargetNormalizationError(LossError):
    """A soft-target row is negative somewhere or does not sum to 1."""


class MissingSubBatchError(LossError):
    """The objective needs a virtual-out, virtual-in or outlier batch that was not supplied."""

"""Errors raised by the synthetic data generator, the model and the training loop."""


class TrainerError(ValueError):
    """Base class for training harness failures."""


class ModelShapeError(TrainerError):
    """Inputs do not match the model's layer sizes."""


class ModelFormatError(TrainerError):
    """A model file has the wrong magic, version or length."""


class DatasetError(TrainerError):
    """A dataset directory is incomplete or inconsistent with its manifest."""


class TrainingDivergedError(TrainerError):
    """The loss became NaN or infinite during training."""

    def __init__(self, epoch: int, step: int, learning_rate: float):
        super().__init__(
            f"Loss is not finite at epoch {epoch}, step {step}; "
            f"learning rate {learning_rate} is probably too high"
        )
        self.epoch = epoch
        self.step = step
        self.learning_rate = learning_rate

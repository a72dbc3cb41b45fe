"""Minibatch training loop.

Shuffling is reseeded per epoch from ``(seed, epoch)`` and each batch's outlier and mixing
draws from ``(seed, mix.rng_seed, epoch, batch)``, so a run is fully determined by its config.
Each epoch's log line holds the sample-weighted means of the loss terms; its total is
recombined from those means with the term weights.
"""

from dataclasses import dataclass

import logfire
import numpy as np

from apps.losses.gradients import loss_gradient
from apps.losses.models import LossConfig, LossTerms, TrainingBatch
from apps.mixing.ops import build_virtual_in, build_virtual_out

from .exceptions import ModelShapeError, TrainingDivergedError
from .models import Array, EpochLog, Optimizer, SyntheticData, TrainConfig
from .network import MlpModel, ModelGradients


@dataclass
class TrainResult:
    model: MlpModel
    log: list[EpochLog]


def one_hot(labels: np.ndarray, num_classes: int) -> Array:
    return np.eye(num_classes, dtype=np.float64)[np.asarray(labels, dtype=np.int64)]


def build_training_batch(
    x: Array,
    y: np.ndarray,
    data: SyntheticData,
    tcfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[TrainingBatch, list[float]]:
    """Assemble the sub-batches the configured objective needs.

    Returns:
        tuple[TrainingBatch, list[float]]: The batch and the mixing coefficients used
    """
    loss: LossConfig = tcfg.loss
    num_classes = data.num_classes
    fields: dict[str, Array] = {}
    lambdas: list[float] = []

    if loss.needs_outliers:
        fields["outlier_x"] = data.outlier_x[rng.integers(0, len(data.outlier_x), size=len(x))]
    if loss.needs_virtual_out:
        virtual_out = build_virtual_out(x, y, data.outlier_x, num_classes, tcfg.mix, rng)
        fields["virtual_out_x"] = virtual_out.xs
        fields["virtual_out_targets"] = virtual_out.ys
        lambdas.append(virtual_out.lambda_used)
    if loss.needs_virtual_in:
        virtual_in = build_virtual_in(x, y, num_classes, tcfg.mix, rng)
        fields["virtual_in_x"] = virtual_in.xs
        fields["virtual_in_targets"] = virtual_in.ys
        lambdas.append(virtual_in.lambda_used)

    return TrainingBatch(in_x=x, in_targets=one_hot(y, num_classes), **fields), lambdas


def _sgd_step(model: MlpModel, gradients: ModelGradients, learning_rate: float):
    for param, grad in zip((*model.weights, *model.biases), (*gradients.weights, *gradients.biases), strict=True):
        param -= learning_rate * grad


def _momentum_step(
    model: MlpModel, gradients: ModelGradients, velocity: ModelGradients, learning_rate: float, momentum: float
):
    params = (*model.weights, *model.biases)
    grads = (*gradients.weights, *gradients.biases)
    velocities = (*velocity.weights, *velocity.biases)
    for param, grad, vel in zip(params, grads, velocities, strict=True):
        vel *= momentum
        vel += grad
        param -= learning_rate * vel


def train(model: MlpModel, data: SyntheticData, tcfg: TrainConfig) -> TrainResult:
    """Train a copy of ``model`` on the ID training set.

    Args:
        model: Initial network; its output width must equal the manifest's class count
        data: Training set, outlier pool and manifest
        tcfg: Epochs, batch size, learning rate, optimizer, objective, mixing and seed

    Returns:
        TrainResult: The trained copy and one log entry per epoch

    Raises:
        TrainingDivergedError: If a loss becomes NaN or infinite
        ModelShapeError: If the model does not fit the data
    """
    if model.input_dim != data.input_dim or model.num_classes != data.num_classes:
        raise ModelShapeError(
            f"Model maps {model.input_dim} inputs to {model.num_classes} classes, "
            f"data has {data.input_dim} inputs and {data.num_classes} classes"
        )
    trained = model.copy()
    velocity = ModelGradients.zeros_like(trained)
    n = len(data.train_x)
    log: list[EpochLog] = []

    with logfire.span("train_run", loss=tcfg.loss.kind.value, seed=tcfg.seed, epochs=tcfg.epochs):
        for epoch in range(tcfg.epochs):
            order = np.random.default_rng([tcfg.seed, epoch]).permutation(n)
            sums = {"ce": 0.0, "out_term": 0.0, "in_term": 0.0}
            weights = LossTerms(ce=0.0)
            lambdas: list[float] = []

            for step, start in enumerate(range(0, n, tcfg.batch_size)):
                index = order[start : start + tcfg.batch_size]
                rng = np.random.default_rng([tcfg.seed, tcfg.mix.rng_seed, epoch, step])
                batch, batch_lambdas = build_training_batch(data.train_x[index], data.train_y[index], data, tcfg, rng)
                terms, gradients = loss_gradient(tcfg.loss, batch, trained)
                if not np.isfinite(terms.total):
                    logfire.error("Training diverged", epoch=epoch, step=step, learning_rate=tcfg.learning_rate)
                    raise TrainingDivergedError(epoch, step, tcfg.learning_rate)

                if tcfg.optimizer is Optimizer.SGD_MOMENTUM:
                    _momentum_step(trained, gradients, velocity, tcfg.learning_rate, tcfg.momentum)
                else:
                    _sgd_step(trained, gradients, tcfg.learning_rate)

                size = len(index)
                sums["ce"] += terms.ce * size
                sums["out_term"] += terms.out_term * size
                sums["in_term"] += terms.in_term * size
                weights = terms
                lambdas.extend(batch_lambdas)

            epoch_terms = LossTerms(
                ce=sums["ce"] / n,
                out_term=sums["out_term"] / n,
                in_term=sums["in_term"] / n,
                out_weight=weights.out_weight,
                in_weight=weights.in_weight,
            )
            entry = EpochLog(
                epoch=epoch,
                **epoch_terms.as_dict(),
                mean_lambda=float(np.mean(lambdas)) if lambdas else None,
            )
            log.append(entry)
            logfire.debug("Epoch finished", epoch=epoch, ce=entry.ce, total=entry.total)

        if not trained.is_finite():
            raise TrainingDivergedError(tcfg.epochs - 1, -1, tcfg.learning_rate)
        logfire.info(
            "Training finished",
            loss=tcfg.loss.kind.value,
            seed=tcfg.seed,
            final_ce=log[-1].ce if log else None,
            final_total=log[-1].total if log else None,
        )
    return TrainResult(model=trained, log=log)

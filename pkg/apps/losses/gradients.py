"""Analytic gradients of the training objectives through an ``MlpModel``.

Derivatives with respect to logits, per mean-reduced term over n rows:

    soft cross-entropy        (softmax(l) - t) / n
    uniform cross-entropy     (softmax(l) - 1/K) / n
    ID energy penalty         -2 * relu(E - m_in) * softmax(l) / n
    outlier energy penalty    +2 * relu(m_out - E) * softmax(l) / n

with ``E = -logsumexp(l)`` and ``dE/dl = -softmax(l)``. Each is scaled by its term weight and
backpropagated through the forward pass of its own sub-batch; the gradients are then summed.
"""

import numpy as np
from scipy.special import softmax

from apps.trainer.network import MlpModel, ModelGradients

from .exceptions import LossError, MissingSubBatchError, TargetShapeError
from .models import Array, BatchTriplet, LossConfig, LossKind, LossTerms, TargetedLogits, TrainingBatch
from .objectives import check_targets, evaluate_loss, free_energy


def soft_cross_entropy_grad(logits, targets) -> Array:
    logits, targets = check_targets(logits, targets)
    return (softmax(logits, axis=1) - targets) / len(logits)


def uniform_cross_entropy_grad(logits) -> Array:
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    return (softmax(logits, axis=1) - 1.0 / logits.shape[1]) / len(logits)


def energy_in_penalty_grad(logits, m_in: float) -> Array:
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    excess = np.maximum(free_energy(logits) - m_in, 0.0)
    return -2.0 * excess[:, np.newaxis] * softmax(logits, axis=1) / len(logits)


def energy_out_penalty_grad(logits, m_out: float) -> Array:
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    shortfall = np.maximum(m_out - free_energy(logits), 0.0)
    return 2.0 * shortfall[:, np.newaxis] * softmax(logits, axis=1) / len(logits)


def _required(value: Array | None, name: str, kind: LossKind) -> Array:
    if value is None:
        raise MissingSubBatchError(f"{kind.value} needs {name} in the training batch")
    return value


def loss_gradient(cfg: LossConfig, batch: TrainingBatch, model: MlpModel) -> tuple[LossTerms, ModelGradients]:
    """Loss terms and the exact gradient of the configured objective w.r.t. every model parameter.

    Args:
        cfg: Objective and weights
        batch: Inputs and soft targets of the ID batch plus whichever extra batches the
            objective consumes (outliers for OE/energy, virtual-out and virtual-in for the
            mixed objectives)
        model: Network whose parameters are differentiated

    Returns:
        tuple[LossTerms, ModelGradients]: The evaluated terms and the parameter gradients

    Raises:
        MissingSubBatchError: If the objective needs a batch that is absent
        TargetShapeError: If target widths differ from the model's class count
    """
    in_logits, in_cache = model.forward_cached(batch.in_x)
    if np.atleast_2d(batch.in_targets).shape[1] != model.num_classes:
        raise TargetShapeError(
            f"Targets have {np.atleast_2d(batch.in_targets).shape[1]} classes, model has {model.num_classes}"
        )
    in_batch = TargetedLogits(in_logits, np.atleast_2d(np.asarray(batch.in_targets, dtype=np.float64)))
    gradients = model.backward(in_cache, soft_cross_entropy_grad(in_batch.logits, in_batch.targets))

    match cfg.kind:
        case LossKind.BASELINE:
            terms = evaluate_loss(cfg, BatchTriplet(in_batch=in_batch))

        case LossKind.OE | LossKind.ENERGY:
            out_logits, out_cache = model.forward_cached(_required(batch.outlier_x, "outlier inputs", cfg.kind))
            terms = evaluate_loss(cfg, BatchTriplet(in_batch=in_batch, outlier_logits=out_logits))
            if cfg.kind is LossKind.OE:
                grad_out = terms.out_weight * uniform_cross_entropy_grad(out_logits)
                gradients = gradients + model.backward(out_cache, grad_out)
            else:
                grad_out = terms.out_weight * energy_out_penalty_grad(out_logits, cfg.m_out)
                grad_in = terms.in_weight * energy_in_penalty_grad(in_logits, cfg.m_in)
                gradients = gradients + model.backward(out_cache, grad_out) + model.backward(in_cache, grad_in)

        case LossKind.MIXOE | LossKind.TERNARY_MIXOE:
            vo_x = _required(batch.virtual_out_x, "virtual-out inputs", cfg.kind)
            vo_logits, vo_cache = model.forward_cached(vo_x)
            virtual_out = TargetedLogits(
                vo_logits, _required(batch.virtual_out_targets, "virtual-out targets", cfg.kind)
            )
            virtual_in = None
            vi_cache = None
            if cfg.needs_virtual_in:
                vi_x = _required(batch.virtual_in_x, "virtual-in inputs", cfg.kind)
                vi_logits, vi_cache = model.forward_cached(vi_x)
                virtual_in = TargetedLogits(
                    vi_logits, _required(batch.virtual_in_targets, "virtual-in targets", cfg.kind)
                )

            terms = evaluate_loss(
                cfg, BatchTriplet(in_batch=in_batch, virtual_out_batch=virtual_out, virtual_in_batch=virtual_in)
            )
            grad_vo = terms.out_weight * soft_cross_entropy_grad(virtual_out.logits, virtual_out.targets)
            gradients = gradients + model.backward(vo_cache, grad_vo)
            if virtual_in is not None and vi_cache is not None:
                grad_vi = terms.in_weight * soft_cross_entropy_grad(virtual_in.logits, virtual_in.targets)
                gradients = gradients + model.backward(vi_cache, grad_vi)

        case _:
            raise LossError(f"Unknown loss kind {cfg.kind!r}")

    return terms, gradients

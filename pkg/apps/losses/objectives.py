"""Training objectives over logits.

Every term is a mean over its batch's rows, taken before weighting. Cross-entropies use
``scipy.special.log_softmax`` so large logits stay finite.
"""

import numpy as np
from scipy.special import log_softmax, logsumexp

from .exceptions import LossError, MissingSubBatchError, TargetNormalizationError, TargetShapeError
from .models import Array, BatchTriplet, LossConfig, LossKind, LossTerms, TargetedLogits

TARGET_SUM_TOLERANCE = 1e-9


def as_matrix(logits) -> Array:
    """Logits as a float64 (n, K) matrix; a single vector becomes one row."""
    matrix = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise TargetShapeError(f"Logits must be a non-empty (n, K) matrix, got shape {matrix.shape}")
    return matrix


def check_targets(logits, targets) -> tuple[Array, Array]:
    """Validate a logits/targets pair.

    Raises:
        TargetShapeError: If the shapes differ
        TargetNormalizationError: If a target row has a negative entry or does not sum to 1
    """
    logits = as_matrix(logits)
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if logits.shape != targets.shape:
        raise TargetShapeError(f"Logits {logits.shape} and targets {targets.shape} differ in shape")
    if np.any(targets < 0) or np.any(np.abs(targets.sum(axis=1) - 1.0) > TARGET_SUM_TOLERANCE):
        raise TargetNormalizationError("Every target row must be non-negative and sum to 1")
    return logits, targets


def soft_cross_entropy(logits, targets) -> float:
    """Mean over rows of ``-sum_k t_k * log softmax(l)_k``.

    Example:
        logits [0, 0] against target [0.5, 0.5] gives log 2
    """
    logits, targets = check_targets(logits, targets)
    return float(np.mean(-(targets * log_softmax(logits, axis=1)).sum(axis=1)))


def uniform_cross_entropy(logits) -> float:
    """Mean cross-entropy from the uniform distribution to ``softmax(logits)``."""
    logits = as_matrix(logits)
    return float(np.mean(-log_softmax(logits, axis=1).mean(axis=1)))


def free_energy(logits) -> Array:
    """Per-row free energy ``-logsumexp(logits)``; lower means more in-distribution."""
    return -logsumexp(as_matrix(logits), axis=1)


def energy_in_penalty(id_logits, m_in: float) -> float:
    """Mean ``relu(E(x_in) - m_in)^2`` over ID rows."""
    return float(np.mean(np.maximum(free_energy(id_logits) - m_in, 0.0) ** 2))


def energy_out_penalty(out_logits, m_out: float) -> float:
    """Mean ``relu(m_out - E(x_out))^2`` over outlier rows."""
    return float(np.mean(np.maximum(m_out - free_energy(out_logits), 0.0) ** 2))


def _check_classes(id_logits: Array, other_logits: Array):
    if as_matrix(other_logits).shape[1] != id_logits.shape[1]:
        raise TargetShapeError(
            f"ID logits have {id_logits.shape[1]} classes but the other batch has {as_matrix(other_logits).shape[1]}"
        )


def oe_loss(id_logits, id_targets, out_logits, oe_weight: float) -> float:
    """Outlier Exposure: ID cross-entropy plus ``oe_weight`` times the outliers' cross-entropy to uniform.

    Raises:
        TargetShapeError: If the outlier logits have a different K
    """
    return _oe_terms(id_logits, id_targets, out_logits, oe_weight).total


def _oe_terms(id_logits, id_targets, out_logits, oe_weight: float) -> LossTerms:
    ce = soft_cross_entropy(id_logits, id_targets)
    _check_classes(as_matrix(id_logits), out_logits)
    return LossTerms(ce=ce, out_term=uniform_cross_entropy(out_logits), out_weight=oe_weight)


def energy_ft_loss(
    id_logits,
    id_targets,
    out_logits,
    m_in: float,
    m_out: float,
    weight: float = 1.0,
) -> float:
    """Energy-margin fine-tuning: ID cross-entropy plus the two squared-hinge margin penalties.

    ``CE + weight * mean relu(m_out - E_out)^2 + weight * mean relu(E_in - m_in)^2`` with
    ``E = -logsumexp(logits)``.

    Raises:
        TargetShapeError: If the outlier logits have a different K
    """
    return _energy_terms(id_logits, id_targets, out_logits, m_in, m_out, weight).total


def _energy_terms(id_logits, id_targets, out_logits, m_in: float, m_out: float, weight: float) -> LossTerms:
    if not (np.isfinite(m_in) and np.isfinite(m_out)):
        raise LossError("Energy margins must be finite")
    ce = soft_cross_entropy(id_logits, id_targets)
    _check_classes(as_matrix(id_logits), out_logits)
    return LossTerms(
        ce=ce,
        out_term=energy_out_penalty(out_logits, m_out),
        in_term=energy_in_penalty(id_logits, m_in),
        out_weight=weight,
        in_weight=weight,
    )


def _mixed_terms(triplet: BatchTriplet, beta: float, gamma: float, require_virtual_in: bool) -> LossTerms:
    if triplet.virtual_out_batch is None:
        raise MissingSubBatchError("Mixed objective needs a virtual-out batch")
    if require_virtual_in and triplet.virtual_in_batch is None:
        raise MissingSubBatchError("TernaryMixOE with gamma > 0 needs a virtual-in batch")

    ce = soft_cross_entropy(triplet.in_batch.logits, triplet.in_batch.targets)
    out_term = _targeted_ce(triplet.virtual_out_batch)
    in_term = _targeted_ce(triplet.virtual_in_batch) if triplet.virtual_in_batch is not None else 0.0
    return LossTerms(ce=ce, out_term=out_term, in_term=in_term, out_weight=beta, in_weight=gamma)


def _targeted_ce(batch: TargetedLogits) -> float:
    return soft_cross_entropy(batch.logits, batch.targets)


def mixoe_loss(triplet: BatchTriplet, beta: float) -> float:
    """``CE(in) + beta * CE(virtual_out)``.

    Raises:
        MissingSubBatchError: If the triplet has no virtual-out batch
    """
    return _mixed_terms(triplet, beta, 0.0, require_virtual_in=False).total


def ternary_mixoe_loss(triplet: BatchTriplet, beta: float, gamma: float) -> float:
    """``CE(in) + beta * CE(virtual_out) + gamma * CE(virtual_in)``.

    With ``gamma == 0`` this equals ``mixoe_loss`` exactly, and with ``beta == gamma == 0`` it
    equals the ID cross-entropy.

    Raises:
        MissingSubBatchError: If the virtual-out batch is missing, or the virtual-in batch is
            missing while ``gamma > 0``
    """
    return _mixed_terms(triplet, beta, gamma, require_virtual_in=gamma > 0).total


def evaluate_loss(cfg: LossConfig, triplet: BatchTriplet) -> LossTerms:
    """The configured objective, term by term.

    Raises:
        MissingSubBatchError: If the objective needs a batch the triplet does not carry
    """
    in_batch = triplet.in_batch
    match cfg.kind:
        case LossKind.BASELINE:
            return LossTerms(ce=soft_cross_entropy(in_batch.logits, in_batch.targets))
        case LossKind.OE:
            if triplet.outlier_logits is None:
                raise MissingSubBatchError("Outlier Exposure needs an outlier batch")
            return _oe_terms(in_batch.logits, in_batch.targets, triplet.outlier_logits, cfg.oe_weight)
        case LossKind.ENERGY:
            if triplet.outlier_logits is None:
                raise MissingSubBatchError("Energy fine-tuning needs an outlier batch")
            return _energy_terms(
                in_batch.logits, in_batch.targets, triplet.outlier_logits, cfg.m_in, cfg.m_out, cfg.energy_weight
            )
        case LossKind.MIXOE:
            return _mixed_terms(triplet, cfg.beta, 0.0, require_virtual_in=False)
        case LossKind.TERNARY_MIXOE:
            return _mixed_terms(triplet, cfg.beta, cfg.gamma, require_virtual_in=cfg.gamma > 0)
    raise LossError(f"Unknown loss kind {cfg.kind!r}")


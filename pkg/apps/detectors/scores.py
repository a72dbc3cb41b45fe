"""MSP, temperature-scaled MSP and energy scores.

All scores follow one convention: higher means more in-distribution. Arithmetic is float64;
``scipy.special`` softmax and log-sum-exp subtract the row maximum, so logits of magnitude
1e4 still give finite scores.
"""

from collections.abc import Sequence

import logfire
import numpy as np
from scipy.special import logsumexp, softmax

from apps.metrics.models import ScoreRecord

from .exceptions import DetectorError, DimensionMismatchError, MissingLogitsError, NonFiniteLogitsError
from .models import DetectorConfig, DetectorKind, Logits


def check_logits(values, num_classes: int | None = None) -> Logits:
    """Validate logits and return them as a float64 array of shape (K,) or (n, K).

    Args:
        values: One logit vector or a matrix with one row per sample
        num_classes: Expected K, if known

    Raises:
        DimensionMismatchError: If K < 2, K differs from ``num_classes`` or the array is not 1-D/2-D
        NonFiniteLogitsError: If any entry is NaN or infinite
    """
    logits = np.asarray(values, dtype=np.float64)
    if logits.ndim not in (1, 2):
        raise DimensionMismatchError(f"Logits must be a vector or a matrix, got shape {logits.shape}")
    k = logits.shape[-1]
    if k < 2:
        raise DimensionMismatchError(f"Logits need at least 2 classes, got {k}")
    if num_classes is not None and k != num_classes:
        raise DimensionMismatchError(f"Logits have {k} classes, expected {num_classes}")
    if not np.all(np.isfinite(logits)):
        raise NonFiniteLogitsError("Logits contain NaN or infinite values")
    return logits


def _check_temperature(temperature: float) -> float:
    if not np.isfinite(temperature) or temperature <= 0:
        raise DetectorError(f"Temperature must be a positive finite number, got {temperature}")
    return float(temperature)


def msp_scores(logits, temperature: float = 1.0) -> np.ndarray:
    """Maximum softmax probability of ``logits / T`` for every row."""
    logits = check_logits(logits)
    temperature = _check_temperature(temperature)
    return softmax(logits / temperature, axis=-1).max(axis=-1)


def energy_scores(logits, temperature: float = 1.0) -> np.ndarray:
    """Negative free energy ``T * logsumexp(logits / T)`` for every row."""
    logits = check_logits(logits)
    temperature = _check_temperature(temperature)
    return temperature * logsumexp(logits / temperature, axis=-1)


def msp_score(logits, temperature: float = 1.0) -> float:
    """Maximum softmax probability of one logit vector, in (0, 1].

    Example:
        ``msp_score([10, 0])`` is 1 / (1 + e^-10); ``msp_score([10, 0], 1000)`` is about 0.5025
    """
    return float(msp_scores(_as_vector(logits), temperature))


def energy_score(logits, temperature: float = 1.0) -> float:
    """Negative free energy of one logit vector; adding c to every logit adds c to the score."""
    return float(energy_scores(_as_vector(logits), temperature))


def _as_vector(logits) -> Logits:
    vector = check_logits(logits)
    if vector.ndim != 1:
        raise DimensionMismatchError(f"Expected one logit vector, got shape {vector.shape}")
    return vector


def detector_scores(cfg: DetectorConfig, logits) -> np.ndarray:
    """Scores of the configured detector for a logit matrix."""
    if cfg.kind is DetectorKind.ENERGY:
        return energy_scores(logits, cfg.temperature)
    return msp_scores(logits, cfg.temperature)


def score_batch(
    records: Sequence[ScoreRecord],
    cfg: DetectorConfig,
    num_classes: int | None = None,
) -> list[tuple[str, float]]:
    """Apply a detector to every record's logits.

    Args:
        records: Records carrying logits
        cfg: Detector kind and temperature
        num_classes: K from the manifest; defaults to the first record's logit count

    Returns:
        list[tuple[str, float]]: ``(record_id, score)`` in input order

    Raises:
        MissingLogitsError: If a record has no logits
        DimensionMismatchError: If a record's logit count differs from K, naming the record
    """
    if not records:
        return []

    expected = num_classes
    for record in records:
        if record.logits is None:
            raise MissingLogitsError(f"Record {record.record_id!r} has no logits to score")
        if expected is None:
            expected = len(record.logits)
        if len(record.logits) != expected:
            raise DimensionMismatchError(
                f"Record {record.record_id!r} has {len(record.logits)} logits, expected {expected}",
                record.record_id,
            )

    matrix = check_logits([record.logits for record in records], expected)
    scores = detector_scores(cfg, matrix)
    logfire.debug("Scored batch", detector=cfg.label, records=len(records), num_classes=expected)
    return [(record.record_id, float(score)) for record, score in zip(records, scores, strict=True)]


def apply_scores(
    records: Sequence[ScoreRecord],
    cfg: DetectorConfig,
    num_classes: int | None = None,
) -> list[ScoreRecord]:
    """Copies of the records with ``score`` set by the configured detector (logits kept)."""
    scored = score_batch(records, cfg, num_classes)
    return [
        record.model_copy(update={"score": score}) for record, (_, score) in zip(records, scored, strict=True)
    ]

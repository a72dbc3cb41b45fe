"""Exact ROC machinery: midrank AUROC, the ROC curve and FPR at a target TPR.

Conventions: a sample is predicted positive when ``score >= threshold``; AUROC counts tied
positive/negative pairs as half a win.
"""

from collections.abc import Sequence

import numpy as np
from scipy.stats import rankdata

from .exceptions import UndefinedMetricError
from .models import RocCurve


def _scores(values: Sequence[float] | np.ndarray, name: str) -> np.ndarray:
    scores = np.asarray(values, dtype=np.float64).ravel()
    if scores.size == 0:
        raise UndefinedMetricError(f"{name} scores are empty; the metric is undefined")
    if not np.all(np.isfinite(scores)):
        raise UndefinedMetricError(f"{name} scores contain NaN or infinite values")
    return scores


def auroc(pos_scores: Sequence[float] | np.ndarray, neg_scores: Sequence[float] | np.ndarray) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic P(pos > neg) + 0.5 * P(pos = neg).

    Computed from midranks of the pooled scores in O((n + m) log(n + m)). Midranks are
    half-integers, so the rank sum is exact in float64 and the result matches a pairwise count.

    Args:
        pos_scores: Scores of the positive (ID-like) set
        neg_scores: Scores of the negative set

    Returns:
        float: AUROC in [0, 1]

    Raises:
        UndefinedMetricError: If either set is empty
    """
    pos = _scores(pos_scores, "Positive")
    neg = _scores(neg_scores, "Negative")
    n, m = pos.size, neg.size

    ranks = rankdata(np.concatenate([pos, neg]), method="average")
    u_statistic = ranks[:n].sum() - n * (n + 1) / 2
    return float(u_statistic / (n * m))


def roc_curve(pos_scores: Sequence[float] | np.ndarray, neg_scores: Sequence[float] | np.ndarray) -> RocCurve:
    """ROC points at every distinct score, from (0, 0) at +inf to (1, 1) at the minimum score.

    Raises:
        UndefinedMetricError: If either set is empty
    """
    pos = np.sort(_scores(pos_scores, "Positive"))
    neg = np.sort(_scores(neg_scores, "Negative"))

    distinct = np.unique(np.concatenate([pos, neg]))[::-1]
    thresholds = np.concatenate([[np.inf], distinct])
    # count of scores >= threshold
    tp = pos.size - np.searchsorted(pos, thresholds, side="left")
    fp = neg.size - np.searchsorted(neg, thresholds, side="left")
    return RocCurve(thresholds=thresholds, tpr=tp / pos.size, fpr=fp / neg.size)


def threshold_at_tpr(
    pos_scores: Sequence[float] | np.ndarray,
    neg_scores: Sequence[float] | np.ndarray,
    tpr_target: float = 0.95,
) -> tuple[float, float]:
    """Largest threshold whose TPR reaches the target, and the FPR there.

    Returns:
        tuple[float, float]: ``(threshold, fpr)``

    Raises:
        UndefinedMetricError: If either set is empty
        ValueError: If ``tpr_target`` is outside (0, 1]
    """
    if not 0.0 < tpr_target <= 1.0:
        raise ValueError(f"tpr_target must be in (0, 1], got {tpr_target}")
    curve = roc_curve(pos_scores, neg_scores)
    # tpr reaches 1.0 at the last threshold, so a match always exists
    index = int(np.argmax(curve.tpr >= tpr_target))
    return float(curve.thresholds[index]), float(curve.fpr[index])


def fpr_at_tpr(
    pos_scores: Sequence[float] | np.ndarray,
    neg_scores: Sequence[float] | np.ndarray,
    tpr_target: float = 0.95,
) -> float:
    """False-positive rate at the largest threshold with TPR >= ``tpr_target``.

    Example:
        pos=[0.9, 0.8, 0.7, 0.6], neg=[0.65, 0.5] picks threshold 0.6 and returns 0.5

    Raises:
        UndefinedMetricError: If either set is empty
    """
    return threshold_at_tpr(pos_scores, neg_scores, tpr_target)[1]

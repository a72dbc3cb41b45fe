"""Hierarchical and semantic-vs-true evaluation reports.

Hierarchical rows compare ID (positive) against each holdout level's OOD records and against
their union ("All"). The semantic-vs-true row ("ST") compares semantic OOD (positive) against
true OOD, which measures the lower of the two thresholds of a ternary ID / semantic / true
classifier.
"""

from collections.abc import Iterable, Sequence

import logfire
import numpy as np

from apps.hierarchy.models import HoldoutLevel, Membership

from .exceptions import MissingMembershipError, UndefinedMetricError, UnscoredRecordError
from .models import (
    ALL_ROW,
    SEMANTIC_TRUE_ROW,
    MetricReport,
    MetricRow,
    ReportProvenance,
    ScoreHistogram,
    ScoreRecord,
    TernarySummary,
)
from .roc import auroc, fpr_at_tpr, threshold_at_tpr

TPR_TARGET = 0.95

ID_GROUP = "ID"
SEMANTIC_GROUP = "semantic"
TRUE_GROUP = "true"
GROUPS = (ID_GROUP, SEMANTIC_GROUP, TRUE_GROUP)


def _group_of(membership: Membership) -> str:
    if membership is Membership.ID:
        return ID_GROUP
    if membership is Membership.TRUE_OOD:
        return TRUE_GROUP
    return SEMANTIC_GROUP


def _require_score(record: ScoreRecord) -> float:
    if record.score is None:
        raise UnscoredRecordError(f"Record {record.record_id!r} has no score; run a detector first", record.record_id)
    return record.score


def _scores_by_membership(records: Iterable[ScoreRecord]) -> dict[Membership, np.ndarray]:
    grouped: dict[Membership, list[float]] = {}
    for record in records:
        grouped.setdefault(record.membership, []).append(_require_score(record))
    return {membership: np.asarray(scores, dtype=np.float64) for membership, scores in grouped.items()}


def metric_row(
    set_name: str, pos_scores: np.ndarray, neg_scores: np.ndarray, tpr_target: float = TPR_TARGET
) -> MetricRow:
    """AUROC and FPR at the target TPR for one comparison."""
    return MetricRow(
        set_name=set_name,
        auroc=auroc(pos_scores, neg_scores),
        fpr_at_95tpr=fpr_at_tpr(pos_scores, neg_scores, tpr_target),
        n_pos=len(pos_scores),
        n_neg=len(neg_scores),
    )


def _hierarchical_rows(grouped: dict[Membership, np.ndarray], tpr_target: float = TPR_TARGET) -> list[MetricRow]:
    if Membership.ID not in grouped:
        raise MissingMembershipError("Hierarchical report needs ID records")
    levels = [level for level in HoldoutLevel if Membership.for_level(level) in grouped]
    if not levels:
        raise MissingMembershipError("Hierarchical report needs records from at least one holdout level")

    id_scores = grouped[Membership.ID]
    rows = [metric_row(level.value, id_scores, grouped[Membership.for_level(level)], tpr_target) for level in levels]
    union = np.concatenate([grouped[Membership.for_level(level)] for level in levels])
    rows.append(metric_row(ALL_ROW, id_scores, union, tpr_target))
    return rows


def _semantic_true_row(grouped: dict[Membership, np.ndarray], tpr_target: float = TPR_TARGET) -> MetricRow:
    semantic = [scores for membership, scores in grouped.items() if membership.is_semantic]
    if not semantic:
        raise MissingMembershipError("Semantic-vs-true report needs semantic OOD records")
    if Membership.TRUE_OOD not in grouped:
        raise MissingMembershipError("Semantic-vs-true report needs TRUE_OOD records")
    return metric_row(SEMANTIC_TRUE_ROW, np.concatenate(semantic), grouped[Membership.TRUE_OOD], tpr_target)


def hierarchical_report(
    records: Sequence[ScoreRecord],
    detector: str | None = None,
    provenance: ReportProvenance | None = None,
) -> MetricReport:
    """One row per holdout level present (ID vs OOD_Lk) plus the "All" row.

    "All" compares ID against the pooled records of every level, so levels are weighted by
    their record counts. TRUE_OOD records are not part of any hierarchical row.

    Args:
        records: Scored records
        detector: Detector label stored in the report
        provenance: Provenance stored in the report

    Returns:
        MetricReport: Rows ordered L1, L2, L3, All

    Raises:
        MissingMembershipError: If there are no ID records or no semantic OOD records
        UnscoredRecordError: If a record has no score
    """
    rows = _hierarchical_rows(_scores_by_membership(records))
    return MetricReport(rows=rows, detector=detector, provenance=provenance or ReportProvenance())


def semantic_true_report(records: Sequence[ScoreRecord]) -> MetricRow:
    """The "ST" row: semantic OOD (positive) against true OOD (negative).

    Raises:
        MissingMembershipError: If either set has no records
    """
    return _semantic_true_row(_scores_by_membership(records))


def id_accuracy(records: Sequence[ScoreRecord]) -> float:
    """Fraction of labeled ID records whose arg-max logit is the true class.

    Ties go to the lowest class index.

    Raises:
        UndefinedMetricError: If no ID record carries both logits and a true class
    """
    labeled = [
        record
        for record in records
        if record.membership is Membership.ID and record.logits is not None and record.true_class is not None
    ]
    if not labeled:
        raise UndefinedMetricError("ID accuracy needs ID records with logits and a true class")
    correct = sum(int(np.argmax(record.logits)) == record.true_class for record in labeled)
    return correct / len(labeled)


def ternary_threshold_summary(records: Sequence[ScoreRecord], tpr_target: float = TPR_TARGET) -> TernarySummary:
    """Two thresholds splitting scores into ID, semantic OOD and true OOD.

    ``tau_high`` keeps ``tpr_target`` of ID records above it against all OOD; ``tau_low`` keeps
    ``tpr_target`` of semantic records above it against true OOD. A record is predicted ID when
    ``score >= tau_high``, semantic when ``tau_low <= score < tau_high`` and true otherwise.

    Raises:
        MissingMembershipError: If ID, semantic or true OOD records are missing
    """
    grouped_scores: dict[str, list[float]] = {group: [] for group in GROUPS}
    for record in records:
        grouped_scores[_group_of(record.membership)].append(_require_score(record))
    for group in GROUPS:
        if not grouped_scores[group]:
            raise MissingMembershipError(f"Ternary summary needs {group} records")

    id_scores = np.asarray(grouped_scores[ID_GROUP])
    semantic = np.asarray(grouped_scores[SEMANTIC_GROUP])
    true_ood = np.asarray(grouped_scores[TRUE_GROUP])

    tau_high, _ = threshold_at_tpr(id_scores, np.concatenate([semantic, true_ood]), tpr_target)
    tau_low, _ = threshold_at_tpr(semantic, true_ood, tpr_target)

    confusion = []
    for scores in (id_scores, semantic, true_ood):
        predicted_id = scores >= tau_high
        predicted_semantic = ~predicted_id & (scores >= tau_low)
        predicted_true = ~predicted_id & ~predicted_semantic
        confusion.append([int(predicted_id.sum()), int(predicted_semantic.sum()), int(predicted_true.sum())])

    return TernarySummary(tau_high=tau_high, tau_low=tau_low, confusion=confusion)


def score_histograms(records: Sequence[ScoreRecord], bins: int = 20) -> ScoreHistogram:
    """Binned score counts for ID, semantic and true OOD over shared edges.

    Raises:
        UndefinedMetricError: If there are no scored records
    """
    if bins < 1:
        raise ValueError(f"bins must be positive, got {bins}")
    grouped_scores: dict[str, list[float]] = {group: [] for group in GROUPS}
    for record in records:
        grouped_scores[_group_of(record.membership)].append(_require_score(record))

    all_scores = [score for scores in grouped_scores.values() for score in scores]
    if not all_scores:
        raise UndefinedMetricError("No scored records to bin")
    edges = np.histogram_bin_edges(all_scores, bins=bins)
    counts = {
        group: np.histogram(scores, bins=edges)[0].astype(int).tolist() for group, scores in grouped_scores.items()
    }
    return ScoreHistogram(edges=edges.tolist(), counts=counts)


def full_report(
    records: Sequence[ScoreRecord],
    detector: str | None = None,
    provenance: ReportProvenance | None = None,
    tpr_target: float = TPR_TARGET,
) -> MetricReport:
    """Hierarchical rows, the ST row when true OOD is present, ID accuracy and the ternary summary.

    Row order is fixed: L1, L2, L3, All, ST. ID accuracy is included when ID records carry
    logits and labels.
    """
    with logfire.span("full_report", detector=detector, records=len(records)):
        grouped = _scores_by_membership(records)
        rows = _hierarchical_rows(grouped, tpr_target)

        ternary = None
        if Membership.TRUE_OOD in grouped:
            rows.append(_semantic_true_row(grouped, tpr_target))
            ternary = ternary_threshold_summary(records, tpr_target)

        try:
            accuracy = id_accuracy(records)
        except UndefinedMetricError:
            accuracy = None

        report = MetricReport(
            rows=rows,
            id_accuracy=accuracy,
            detector=detector,
            provenance=provenance or ReportProvenance(),
            ternary=ternary,
        )
        logfire.info(
            "Report computed",
            detector=detector,
            rows={row.set_name: round(row.auroc, 4) for row in rows},
            id_accuracy=accuracy,
        )
        return report

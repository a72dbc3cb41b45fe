"""Scoring a trained model on the synthetic test sets."""

from collections.abc import Sequence

import logfire
import numpy as np

from apps.detectors.exceptions import NonFiniteLogitsError
from apps.detectors.models import DetectorConfig
from apps.detectors.scores import apply_scores
from apps.metrics.models import MetricReport, ReportProvenance, ScoreRecord
from apps.metrics.reports import full_report

from .models import SyntheticData
from .network import MlpModel


def score_records(model: MlpModel, data: SyntheticData) -> list[ScoreRecord]:
    """Unscored records carrying the model's logits for every test sample.

    Record ids look like ``OOD_L2-00017``; ID records also carry their class index so the
    report can include ID accuracy.

    Raises:
        NonFiniteLogitsError: If the model produces NaN or infinite logits
    """
    records: list[ScoreRecord] = []
    for membership, test_set in data.test_sets.items():
        logits = model.forward(test_set.x)
        if not np.all(np.isfinite(logits)):
            raise NonFiniteLogitsError(f"Model produced non-finite logits on the {membership.value} test set")
        for index, (row, label) in enumerate(zip(logits, test_set.labels, strict=True)):
            records.append(
                ScoreRecord(
                    record_id=f"{membership.value}-{index:05d}",
                    membership=membership,
                    logits=row.tolist(),
                    true_class=int(label) if label >= 0 else None,
                )
            )
    return records


def _with_manifest_provenance(data: SyntheticData, provenance: ReportProvenance | None) -> ReportProvenance:
    provenance = provenance or ReportProvenance()
    return provenance.model_copy(
        update={
            "hierarchy_id": provenance.hierarchy_id or data.manifest.provenance.hierarchy_id,
            "rule_hash": provenance.rule_hash or data.manifest.provenance.rule_hash,
        }
    )


def evaluate_detectors(
    model: MlpModel,
    data: SyntheticData,
    detectors: Sequence[DetectorConfig],
    provenance: ReportProvenance | None = None,
) -> list[MetricReport]:
    """Score the test sets once and build one report per detector.

    Args:
        model: Trained network
        data: Dataset whose test sets are scored
        detectors: Detectors applied to the same logits
        provenance: Copied into every report; hierarchy id and rule hash default to the manifest's

    Returns:
        list[MetricReport]: Reports in detector order
    """
    provenance = _with_manifest_provenance(data, provenance)
    records = score_records(model, data)
    reports = []
    for cfg in detectors:
        scored = apply_scores(records, cfg, data.num_classes)
        reports.append(full_report(scored, detector=cfg.label, provenance=provenance))
    logfire.info("Model evaluated", detectors=[cfg.label for cfg in detectors], records=len(records))
    return reports


def evaluate(
    model: MlpModel,
    data: SyntheticData,
    detector: DetectorConfig,
    provenance: ReportProvenance | None = None,
) -> MetricReport:
    """Report of a single detector on the model's test-set logits."""
    return evaluate_detectors(model, data, [detector], provenance)[0]

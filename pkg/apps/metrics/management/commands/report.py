"""Management command to build a metric report from a scores file.

Records that carry logits but no score are scored first (MSP unless ``--detector`` says
otherwise). With ``--manifest`` the records are checked against the split and the report
carries its hierarchy id and rule hash.

Usage:
    python manage.py report --scores scores.jsonl --manifest manifest.json --out report.json --table report.csv
    python manage.py report --scores logits.jsonl --detector energy --histograms hist.json --out report.json
"""

from apps.cli.base import ToolCommand
from apps.cli.exceptions import DataFileError
from apps.cli.io import ingest_scores, read_manifest, write_json, write_report
from apps.cli.rendering import render_table
from apps.cli.schemas import ReportSection, config_hash
from apps.detectors.models import DetectorConfig, DetectorKind
from apps.detectors.scores import apply_scores
from apps.hierarchy.models import SplitManifest
from apps.metrics.models import ReportProvenance, ScoreRecord
from apps.metrics.reports import full_report, score_histograms


def check_against_manifest(records: list[ScoreRecord], manifest: SplitManifest):
    """Memberships, logit widths and class labels must agree with the split.

    Raises:
        DataFileError: Naming the first record that disagrees
    """
    levels = set(manifest.levels)
    for record in records:
        level = record.membership.level
        if level is not None and level not in levels:
            raise DataFileError(
                f"Record {record.record_id!r} is {record.membership.value} but the split holds out no {level.value}"
            )
        if record.logits is not None and len(record.logits) != manifest.num_classes:
            raise DataFileError(
                f"Record {record.record_id!r} has {len(record.logits)} logits, "
                f"the split has {manifest.num_classes} classes"
            )
        if record.true_class is not None and record.true_class >= manifest.num_classes:
            raise DataFileError(
                f"Record {record.record_id!r} has class {record.true_class}, "
                f"the split has {manifest.num_classes} classes"
            )


class Command(ToolCommand):
    """Hierarchical and semantic-vs-true metrics for a scores file."""

    help = "Compute AUROC / FPR@95TPR rows (L1, L2, L3, All, ST), ID accuracy and the ternary summary"

    def add_command_arguments(self, parser):
        parser.add_argument("--scores", required=True, help="JSON-lines scores or logits file")
        parser.add_argument("--manifest", help="Split manifest the records were produced under")
        parser.add_argument("--detector", choices=[kind.value for kind in DetectorKind], default=None)
        parser.add_argument("--temperature", type=float, default=None)
        parser.add_argument("--table", help="Also write the report as a one-row aggregate CSV table to this file")
        parser.add_argument("--histograms", help="Also write binned score counts per group to this file")

    def run(self, **options):
        config = self.load_config(options)
        section = (config.report if config is not None else None) or ReportSection()
        records = ingest_scores(options["scores"])

        provenance = ReportProvenance(
            seed=options["seed"] if options["seed"] is not None else (config.seed if config else None),
            config_hash=config_hash(config) if config is not None else None,
        )
        if options["manifest"]:
            manifest = read_manifest(options["manifest"])
            check_against_manifest(records, manifest)
            provenance = provenance.model_copy(
                update={
                    "hierarchy_id": manifest.provenance.hierarchy_id,
                    "rule_hash": manifest.provenance.rule_hash,
                }
            )

        detector = None
        unscored = any(record.score is None for record in records)
        if options["detector"] or unscored:
            cfg = DetectorConfig.for_kind(options["detector"] or DetectorKind.MSP, options["temperature"])
            records = apply_scores(records, cfg)
            detector = cfg.label

        report = full_report(records, detector=detector, provenance=provenance, tpr_target=section.tpr_target)
        out = write_report(report, self.resolve_out(options["out"]))

        bins = section.histogram_bins or 20
        if options["histograms"]:
            histogram = score_histograms(records, bins=bins)
            write_json(histogram.model_dump(), self.resolve_out(options["histograms"]))

        if options["table"]:
            table = render_table({detector or "scores": [report]})
            table_path = self.resolve_out(options["table"])
            table_path.parent.mkdir(parents=True, exist_ok=True)
            table_path.write_text(table.to_csv(), encoding="utf-8")
            self.info(table.to_text())
        self.success(f"Wrote report with rows {', '.join(report.set_names)} to {out}")

"""Management command to evaluate a trained model on a dataset's test sets.

Usage:
    python manage.py evaluate --model model.bin --data data/seed-0 --detector msp --out report.json
    python manage.py evaluate --model model.bin --data data/seed-0 --detector energy --out report.json \\
        --logits-out logits.jsonl
"""

from apps.cli.base import ToolCommand
from apps.cli.io import write_report, write_scores
from apps.cli.schemas import config_hash
from apps.detectors.models import DetectorConfig, DetectorKind
from apps.metrics.models import ALL_ROW, ReportProvenance
from apps.trainer.evaluation import evaluate, score_records
from apps.trainer.storage import load_dataset, load_model


class Command(ToolCommand):
    """Score every test membership and write the metric report."""

    help = "Evaluate a model file on a dataset directory with one detector"

    def add_command_arguments(self, parser):
        parser.add_argument("--model", required=True, help="Model file written by train")
        parser.add_argument("--data", required=True, help="Dataset directory written by synth")
        parser.add_argument("--detector", choices=[kind.value for kind in DetectorKind], default=None)
        parser.add_argument("--temperature", type=float, default=None)
        parser.add_argument("--logits-out", help="Also write the test-set logits as a JSON-lines file")

    def run(self, **options):
        config = self.load_config(options)
        if options["detector"]:
            detector = DetectorConfig.for_kind(options["detector"], options["temperature"])
        elif config is not None and config.evaluate is not None:
            detector = config.evaluate.detectors[0]
        else:
            detector = DetectorConfig.for_kind(DetectorKind.MSP, options["temperature"])

        model = load_model(options["model"])
        data = load_dataset(options["data"])
        provenance = ReportProvenance(
            seed=self.resolve_seed(options, config),
            config_hash=config_hash(config) if config is not None else None,
        )
        report = evaluate(model, data, detector, provenance)
        out = write_report(report, self.resolve_out(options["out"]))

        if options["logits_out"]:
            write_scores(score_records(model, data), self.resolve_out(options["logits_out"]))

        all_row = report.row(ALL_ROW)
        summary = f"All AUROC {all_row.auroc:.4f}" if all_row is not None else "no OOD rows"
        self.success(f"Evaluated with {detector.label}: {summary}; wrote {out}")

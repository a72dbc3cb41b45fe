"""Management command to apply an OOD detector to a file of logits.

Usage:
    python manage.py score --logits logits.jsonl --detector msp --out scores.jsonl
    python manage.py score --logits logits.jsonl --detector msp-temp --temperature 1000 --out scores.jsonl
"""

from apps.cli.base import ToolCommand
from apps.cli.io import ingest_scores, write_scores
from apps.detectors.models import DetectorConfig, DetectorKind
from apps.detectors.scores import apply_scores


class Command(ToolCommand):
    """Score every record of a logits file."""

    help = "Apply a detector (msp, msp-temp, energy) to a JSON-lines logits file"

    def add_command_arguments(self, parser):
        parser.add_argument("--logits", required=True, help="JSON-lines file of records carrying logits")
        parser.add_argument("--detector", choices=[kind.value for kind in DetectorKind], default=None)
        parser.add_argument("--temperature", type=float, default=None, help="Defaults to 1000 for msp-temp, else 1")
        parser.add_argument("--drop-logits", action="store_true", help="Write scores only")

    def detector_config(self, options: dict) -> DetectorConfig:
        """Detector from the arguments, else the config's ``score`` section, else MSP."""
        if options["detector"]:
            return DetectorConfig.for_kind(options["detector"], options["temperature"])
        config = self.load_config(options)
        if config is not None and config.score is not None:
            return config.score.detectors[0]
        return DetectorConfig.for_kind(DetectorKind.MSP, options["temperature"])

    def run(self, **options):
        cfg = self.detector_config(options)
        records = apply_scores(ingest_scores(options["logits"]), cfg)
        if options["drop_logits"]:
            records = [record.model_copy(update={"logits": None}) for record in records]

        out = write_scores(records, self.resolve_out(options["out"]))
        self.success(f"Scored {len(records)} records with {cfg.label} into {out}")

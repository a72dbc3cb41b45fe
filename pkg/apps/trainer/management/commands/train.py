"""Management command to train a classifier on a dataset directory.

``--out`` is either a directory (receiving ``model.bin`` and ``log.jsonl``) or an explicit
``MODEL,LOG`` pair.

Usage:
    python manage.py train --config configs/default_experiment.json --data data/seed-0 --out runs/mixoe
    python manage.py train --data data/seed-0 --loss ternary_mixoe --out model.bin,log.jsonl
"""

from pathlib import Path

import numpy as np

from apps.cli.base import ToolCommand
from apps.losses.models import LossKind
from apps.trainer.models import TrainConfig
from apps.trainer.network import MlpModel
from apps.trainer.storage import load_dataset, save_model, write_log
from apps.trainer.training import train

MODEL_FILE = "model.bin"
LOG_FILE = "log.jsonl"


class Command(ToolCommand):
    """Train with the config's ``train`` section; flags override single fields."""

    help = "Train the feed-forward classifier with the configured objective and write model and log"

    def add_command_arguments(self, parser):
        parser.add_argument("--data", required=True, help="Dataset directory written by synth")
        parser.add_argument("--loss", choices=[kind.value for kind in LossKind], default=None)
        parser.add_argument("--epochs", type=int, default=None)
        parser.add_argument("--learning-rate", type=float, default=None)

    def train_config(self, options: dict) -> TrainConfig:
        config = self.load_config(options)
        section = (config.train if config is not None else None) or TrainConfig()
        update: dict = {"seed": self.resolve_seed(options, config, section)}
        if options["loss"]:
            update["loss"] = {**section.loss.model_dump(), "kind": options["loss"]}
        if options["epochs"] is not None:
            update["epochs"] = options["epochs"]
        if options["learning_rate"] is not None:
            update["learning_rate"] = options["learning_rate"]
        return TrainConfig.model_validate({**section.model_dump(), **update})

    def output_paths(self, out: str | None) -> tuple[Path, Path]:
        if out and "," in out:
            model_path, log_path = (part.strip() for part in out.split(",", 1))
            return self.resolve_out(model_path), self.resolve_out(log_path)
        directory = self.resolve_out(out)
        return directory / MODEL_FILE, directory / LOG_FILE

    def run(self, **options):
        tcfg = self.train_config(options)
        model_path, log_path = self.output_paths(options["out"])
        data = load_dataset(options["data"])

        model = MlpModel.initialize(
            tcfg.layer_sizes(data.input_dim, data.num_classes), np.random.default_rng(tcfg.seed)
        )
        result = train(model, data, tcfg)
        save_model(result.model, model_path)
        write_log(result.log, log_path)

        final = result.log[-1]
        self.success(
            f"Trained {tcfg.loss.kind.value} for {tcfg.epochs} epochs (final CE {final.ce:.4f}, "
            f"total {final.total:.4f}); wrote {model_path} and {log_path}"
        )

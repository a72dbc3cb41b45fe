"""Management command to generate a synthetic hierarchical dataset.

Usage:
    python manage.py synth --config configs/default_experiment.json --out data/seed-0 --seed 0
"""

from apps.cli.base import ToolCommand
from apps.trainer.models import SynthConfig
from apps.trainer.storage import save_dataset
from apps.trainer.synthetic import generate_synthetic


class Command(ToolCommand):
    """Write a dataset directory from the config's ``synth`` section (defaults when absent)."""

    help = "Generate a synthetic hierarchical Gaussian-mixture dataset directory"

    def run(self, **options):
        config = self.load_config(options)
        section = (config.synth if config is not None else None) or SynthConfig()
        synth = section.model_copy(update={"seed": self.resolve_seed(options, config, section)})

        data = generate_synthetic(synth)
        out = save_dataset(data, self.resolve_out(options["out"]))

        sizes = ", ".join(f"{membership.value}={len(test_set)}" for membership, test_set in data.test_sets.items())
        self.success(
            f"Wrote dataset to {out}: {data.num_classes} ID classes, {len(data.train_x)} training samples, test {sizes}"
        )

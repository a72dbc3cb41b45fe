"""Management command to run a seeds × methods experiment on synthetic data.

Exit status is 0 when every run succeeds, 4 when a run diverged and 1 when runs failed for
other reasons; successful runs are still written and aggregated.

Usage:
    python manage.py experiment --config configs/default_experiment.json --out results/default
    python manage.py experiment --config configs/default_experiment.json --out results/quick --seeds 0 --max-workers 1
"""

from django.conf import settings
from django.core.management.base import CommandError

from apps.cli.base import EXIT_FAILURE, EXIT_NUMERIC_FAILURE, ToolCommand
from apps.cli.experiment import run_experiment
from apps.cli.schemas import RunConfig, load_run_config


class Command(ToolCommand):
    """Train every method for every seed, evaluate, and aggregate into a table."""

    help = "Run the configured experiment and write per-run reports plus aggregate.csv / aggregate.txt"

    def add_command_arguments(self, parser):
        parser.add_argument("--max-workers", type=int, default=None, help="Process-pool bound")
        parser.add_argument("--seeds", type=int, nargs="+", default=None, help="Override the config's seeds")

    def run(self, **options):
        config = self.load_config(options)
        if config is None:
            config = self.default_config()
        experiment = config.section("experiment")
        if options["seeds"] or options["seed"] is not None:
            seeds = options["seeds"] or [options["seed"]]
            config = config.model_copy(update={"experiment": experiment.model_copy(update={"seeds": seeds})})

        out = self.resolve_out(options["out"], default=config.output_dir)
        result = run_experiment(config, out, max_workers=options["max_workers"])

        if result.table is not None:
            self.info(result.table.to_text())
        for failure in result.failures:
            self.warn(f"{failure.method} seed {failure.seed} failed: {failure.error}")

        if result.failures:
            code = EXIT_NUMERIC_FAILURE if result.diverged else EXIT_FAILURE
            raise CommandError(f"{len(result.failures)} run(s) failed; see {out / 'failures.json'}", returncode=code)
        self.success(f"Experiment finished; wrote {out / 'aggregate.csv'}")

    def default_config(self) -> RunConfig:
        """The bundled default experiment."""
        return load_run_config(settings.CONFIGS_DIR / "default_experiment.json")

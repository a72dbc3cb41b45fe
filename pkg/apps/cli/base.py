"""Shared base for the toolkit's management commands.

Every subcommand takes the global flags ``--seed``, ``--out``, ``--config`` and ``--quiet``
and reports failures through distinct exit codes:

    0  success
    1  generic failure
    2  configuration error (bad run config, hierarchy spec or holdout rule)
    3  data error (unreadable or inconsistent scores, manifests, datasets)
    4  numeric failure (training diverged)
"""

from pathlib import Path

import logfire
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from pydantic import BaseModel, ValidationError

from apps.detectors.exceptions import DetectorError
from apps.hierarchy.exceptions import HierarchyError, SplitError
from apps.losses.exceptions import LossError
from apps.metrics.exceptions import MetricError
from apps.mixing.exceptions import MixingError
from apps.trainer.exceptions import TrainerError, TrainingDivergedError
from fine_grained_ood.config import configure_logfire

from .exceptions import ConfigError, DataFileError
from .schemas import RunConfig, load_run_config

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERIC_FAILURE = 4


def exit_code_for(error: BaseException) -> int:
    """Exit code a command should return for a domain error."""
    if isinstance(error, TrainingDivergedError | FloatingPointError):
        return EXIT_NUMERIC_FAILURE
    if isinstance(error, ConfigError | HierarchyError | SplitError | ValidationError):
        return EXIT_CONFIG_ERROR
    if isinstance(
        error, DataFileError | DetectorError | MetricError | MixingError | LossError | TrainerError | OSError
    ):
        return EXIT_DATA_ERROR
    return EXIT_FAILURE


class ToolCommand(BaseCommand):
    """Base command adding the global flags and exit-code mapping.

    Subclasses implement ``add_command_arguments`` and ``run`` instead of
    ``add_arguments`` and ``handle``.
    """

    quiet = False

    def add_arguments(self, parser):
        """Add the global flags, then the command's own."""
        parser.add_argument("--seed", type=int, default=None, help="Seed overriding the config's seed")
        parser.add_argument("--out", default=None, help="Output file or directory")
        parser.add_argument("--config", default=None, help="Run configuration file (JSON)")
        parser.add_argument("--quiet", action="store_true", help="Only print errors")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        """Add command-specific arguments."""

    def handle(self, *args, **options):
        """Execute the command, translating domain errors into exit codes."""
        self.quiet = options["quiet"]
        if self.quiet:
            configure_logfire(console=False)

        try:
            self.run(**options)
        except CommandError:
            raise
        except Exception as e:
            code = exit_code_for(e)
            if code == EXIT_FAILURE:
                raise
            logfire.error("Command failed", command=self.command_name, error=str(e), exit_code=code)
            raise CommandError(str(e), returncode=code) from e
        finally:
            if self.quiet:
                configure_logfire()

    def run(self, **options):
        """Command body."""
        raise NotImplementedError

    @property
    def command_name(self) -> str:
        return type(self).__module__.rsplit(".", 1)[-1]

    def load_config(self, options: dict) -> RunConfig | None:
        """Parse ``--config`` when given.

        Raises:
            ConfigError: If the file is missing or fails strict validation
        """
        if not options.get("config"):
            return None
        return load_run_config(options["config"])

    def resolve_seed(self, options: dict, config: RunConfig | None, section: BaseModel | None = None) -> int:
        """``--seed``, else a seed set explicitly in the section, else the config's global seed, else 0."""
        if options.get("seed") is not None:
            return options["seed"]
        if section is not None and "seed" in section.model_fields_set:
            return getattr(section, "seed")
        return config.seed if config is not None else 0

    def resolve_out(self, out: str | Path | None, default: str | None = None) -> Path:
        """Output path for the command; ``FGOOD_OUTPUT_DIR`` takes precedence over ``--out``.

        Raises:
            ConfigError: If neither an output path nor a default is available
        """
        chosen = out or default
        override: Path | None = settings.OUTPUT_DIR
        if override is not None:
            return override / Path(chosen).name if chosen else override
        if not chosen:
            raise ConfigError("--out is required", key="out")
        return Path(chosen)

    def success(self, message: str):
        if not self.quiet:
            self.stdout.write(self.style.SUCCESS(message))

    def info(self, message: str):
        if not self.quiet:
            self.stdout.write(message)

    def warn(self, message: str):
        self.stderr.write(self.style.WARNING(message))

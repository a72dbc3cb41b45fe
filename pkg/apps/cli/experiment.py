"""Seeds × methods experiment sweeps on synthetic data.

Methods sharing a training configuration (the same objective, mixing and learning rate, as
for OE scored with and without temperature) train once per seed and are evaluated under each
of their detectors. Jobs run in a bounded process pool, each writing only under its own
``runs/<method>/seed-<seed>/`` directories; aggregation happens afterwards in the parent.

Output layout::

    <out>/config.json                       resolved run config
    <out>/runs/<method>/seed-<s>/report.json
    <out>/runs/<method>/seed-<s>/model.bin
    <out>/runs/<method>/seed-<s>/log.jsonl
    <out>/aggregate.csv, <out>/aggregate.txt
    <out>/failures.json                     failed (method, seed) pairs
"""

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import logfire
import numpy as np
from pydantic import BaseModel, ConfigDict

from apps.metrics.models import MetricReport, ReportProvenance
from apps.trainer.evaluation import evaluate_detectors
from apps.trainer.exceptions import TrainingDivergedError
from apps.trainer.models import SynthConfig, TrainConfig
from apps.trainer.network import MlpModel
from apps.trainer.storage import save_model, write_log
from apps.trainer.synthetic import generate_synthetic
from apps.trainer.training import train
from fine_grained_ood.config import configure_logfire
from fine_grained_ood.config import settings as env_settings

from .io import write_json, write_report
from .rendering import Table, render_table
from .schemas import MethodSpec, RunConfig, config_hash

RUNS_DIR = "runs"


def method_slug(name: str) -> str:
    """Directory name for a method, e.g. ``OE t=1000`` becomes ``oe-t-1000``."""
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "method"


def run_dir(out_dir: Path, method: str, seed: int) -> Path:
    return out_dir / RUNS_DIR / method_slug(method) / f"seed-{seed}"


class RunFailure(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    method: str
    seed: int
    diverged: bool
    error: str


@dataclass(frozen=True)
class ExperimentJob:
    """One training run and the evaluations of every method that shares it."""

    seed: int
    synth: SynthConfig
    train: TrainConfig
    methods: tuple[MethodSpec, ...]
    out_dir: Path
    config_hash: str


@dataclass
class JobOutcome:
    seed: int
    reports: dict[str, MetricReport] = field(default_factory=dict)
    failures: list[RunFailure] = field(default_factory=list)


@dataclass
class ExperimentResult:
    """Reports per method in seed order, the failed runs and the aggregate table."""

    reports: dict[str, list[MetricReport]]
    failures: list[RunFailure]
    table: Table | None

    @property
    def diverged(self) -> bool:
        return any(failure.diverged for failure in self.failures)


def plan_jobs(cfg: RunConfig, out_dir: Path) -> list[ExperimentJob]:
    """Group the seeds × methods grid into training jobs.

    Raises:
        ConfigError: If the config has no ``experiment`` section
    """
    experiment = cfg.section("experiment")
    synth = cfg.synth or SynthConfig()
    base_train = cfg.train or TrainConfig()
    digest = config_hash(cfg)

    jobs = []
    for seed in experiment.seeds:
        grouped: dict[str, tuple[TrainConfig, list[MethodSpec]]] = {}
        for method in experiment.methods:
            train = method.train_config(base_train, seed)
            grouped.setdefault(config_hash(train), (train, []))[1].append(method)
        for train, methods in grouped.values():
            jobs.append(
                ExperimentJob(
                    seed=seed,
                    synth=synth.model_copy(update={"seed": seed}),
                    train=train,
                    methods=tuple(methods),
                    out_dir=out_dir,
                    config_hash=digest,
                )
            )
    return jobs


def run_job(job: ExperimentJob) -> JobOutcome:
    """Generate the seed's data, train once, then evaluate each method's detector.

    Failures are recorded in the outcome rather than raised, so one bad seed does not stop
    the sweep.
    """
    outcome = JobOutcome(seed=job.seed)
    names = [method.name for method in job.methods]
    with logfire.span("experiment_job", seed=job.seed, methods=names, loss=job.train.loss.kind.value):
        try:
            data = generate_synthetic(job.synth)
            model = MlpModel.initialize(
                job.train.layer_sizes(data.input_dim, data.num_classes), np.random.default_rng(job.seed)
            )
            result = train(model, data, job.train)
            provenance = ReportProvenance(config_hash=job.config_hash, seed=job.seed)
            reports = evaluate_detectors(result.model, data, [method.detector for method in job.methods], provenance)
        except Exception as e:
            diverged = isinstance(e, TrainingDivergedError | FloatingPointError)
            logfire.error("Experiment run failed", seed=job.seed, methods=names, error=str(e), diverged=diverged)
            outcome.failures.extend(
                RunFailure(method=name, seed=job.seed, diverged=diverged, error=str(e)) for name in names
            )
            return outcome

        for method, report in zip(job.methods, reports, strict=True):
            directory = run_dir(job.out_dir, method.name, job.seed)
            write_report(report, directory / "report.json")
            save_model(result.model, directory / "model.bin")
            write_log(result.log, directory / "log.jsonl")
            outcome.reports[method.name] = report
    return outcome


def _init_worker():
    configure_logfire(console=False)


def run_experiment(cfg: RunConfig, out_dir: str | Path, max_workers: int | None = None) -> ExperimentResult:
    """Run every (method, seed) pair, write per-run artifacts and the aggregate table.

    Args:
        cfg: Run config with an ``experiment`` section; ``synth`` and ``train`` sections are
            the shared defaults each method overrides
        out_dir: Output directory
        max_workers: Process-pool bound; falls back to the config, then ``FGOOD_MAX_WORKERS``.
            With one worker, jobs run in this process

    Returns:
        ExperimentResult: Reports, failures and the aggregate table (None when every run failed)
    """
    out_dir = Path(out_dir)
    experiment = cfg.section("experiment")
    jobs = plan_jobs(cfg, out_dir)
    workers = max(1, min(max_workers or experiment.max_workers or env_settings.MAX_WORKERS, len(jobs)))

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(cfg.model_dump_json(indent=2) + "\n", encoding="utf-8")

    with logfire.span("run_experiment", jobs=len(jobs), workers=workers, seeds=experiment.seeds):
        if workers == 1:
            outcomes = [run_job(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
                outcomes = list(pool.map(run_job, jobs))

        reports: dict[str, list[MetricReport]] = {method.name: [] for method in experiment.methods}
        failures: list[RunFailure] = []
        for outcome in sorted(outcomes, key=lambda item: item.seed):
            for name, report in outcome.reports.items():
                reports[name].append(report)
            failures.extend(outcome.failures)
        order = [method.name for method in experiment.methods]
        failures.sort(key=lambda failure: (order.index(failure.method), failure.seed))

        reports = {name: method_reports for name, method_reports in reports.items() if method_reports}
        table = render_table(reports) if reports else None
        if table is not None:
            (out_dir / "aggregate.csv").write_text(table.to_csv(), encoding="utf-8")
            (out_dir / "aggregate.txt").write_text(table.to_text(), encoding="utf-8")
        write_json([failure.model_dump() for failure in failures], out_dir / "failures.json")

        logfire.info(
            "Experiment finished",
            out_dir=str(out_dir),
            runs=sum(len(method_reports) for method_reports in reports.values()),
            failures=len(failures),
        )
    return ExperimentResult(reports=reports, failures=failures, table=table)

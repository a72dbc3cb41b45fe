"""Run configuration files.

A run config is a JSON object with a mandatory ``version`` and one optional section per
command. Every model forbids unknown keys, so a typo fails loudly with the key's path::

    {
      "version": 1,
      "seed": 0,
      "split": {"hierarchy": "bundled:fgvc_aircraft", "holdout_file": "bundled:fgvc_aircraft.split1"},
      "synth": {"branching": [4, 3, 2], "dims": 8},
      "train": {"epochs": 50, "loss": {"kind": "mixoe", "beta": 5.0}},
      "evaluate": {"detectors": [{"kind": "msp"}]},
      "experiment": {"seeds": [0, 1, 2, 3, 4], "methods": [...]}
    }
"""

import hashlib
import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, model_validator

from apps.detectors.models import DetectorConfig
from apps.losses.models import LossConfig
from apps.metrics.reports import TPR_TARGET
from apps.mixing.models import MixConfig
from apps.trainer.models import SynthConfig, TrainConfig

from .exceptions import ConfigError

CONFIG_VERSION = 1


class SplitSection(BaseModel):
    """Hierarchy source and holdout rules for ``split``."""

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    hierarchy: str
    holdouts: list[str] = Field(default_factory=list)
    holdout_file: str | None = None


class DetectorSection(BaseModel):
    """Detectors applied by ``score``, ``evaluate`` and ``report``."""

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    detectors: list[DetectorConfig] = Field(default_factory=lambda: [DetectorConfig()], min_length=1)


class ReportSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    tpr_target: float = Field(default=TPR_TARGET, gt=0, le=1)
    histogram_bins: PositiveInt | None = None


class MethodSpec(BaseModel):
    """One row of the experiment table: a training objective scored by one detector.

    ``learning_rate`` and ``mix`` override the experiment's ``train`` section for this method.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    name: str = Field(min_length=1)
    loss: LossConfig = Field(default_factory=LossConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    mix: MixConfig | None = None
    learning_rate: float | None = Field(default=None, ge=0, allow_inf_nan=False)

    def train_config(self, base: TrainConfig, seed: int) -> TrainConfig:
        """The experiment's training config with this method's overrides and the run seed."""
        update: dict = {"loss": self.loss, "seed": seed}
        if self.mix is not None:
            update["mix"] = self.mix
        if self.learning_rate is not None:
            update["learning_rate"] = self.learning_rate
        return TrainConfig.model_validate({**base.model_dump(), **update})


class ExperimentSection(BaseModel):
    """Seeds × methods sweep over freshly generated synthetic data."""

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
    methods: list[MethodSpec] = Field(min_length=1)
    max_workers: PositiveInt | None = None

    @model_validator(mode="after")
    def check_unique(self) -> "ExperimentSection":
        """Method names and seeds are unique"""
        names = [method.name for method in self.methods]
        if len(set(names)) != len(names):
            raise ValueError(f"Method names must be unique, got {names}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"Seeds must be unique, got {self.seeds}")
        return self


class RunConfig(BaseModel):
    """Top-level run configuration."""

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    version: Literal[1]
    seed: int = 0
    output_dir: str | None = None
    split: SplitSection | None = None
    score: DetectorSection | None = None
    synth: SynthConfig | None = None
    train: TrainConfig | None = None
    evaluate: DetectorSection | None = None
    report: ReportSection | None = None
    experiment: ExperimentSection | None = None

    def section(self, name: str):
        """A section by name.

        Raises:
            ConfigError: If the config has no such section
        """
        value = getattr(self, name)
        if value is None:
            raise ConfigError(f"Config has no {name!r} section", key=name)
        return value


def _error_key(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"]) or "<root>"


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    """Validate run-config JSON.

    Raises:
        ConfigError: If the JSON is malformed or fails validation; ``key`` names the first
            offending key path, e.g. ``train.loss.betta``
    """
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as e:
        key = _error_key(e)
        first = e.errors()[0]
        if first["type"] == "json_invalid":
            raise ConfigError(f"{source}: not valid JSON ({first['msg']})", key=None) from e
        raise ConfigError(f"{source}: invalid config key {key!r}: {first['msg']}", key=key) from e


def load_run_config(path: str | Path) -> RunConfig:
    """Read and validate a run-config file.

    Raises:
        ConfigError: If the file is missing, malformed or carries an unknown key
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file {path} does not exist", key=None)
    return parse_run_config(path.read_text(encoding="utf-8"), source=str(path))


def config_hash(config: BaseModel | dict) -> str:
    """Stable digest of a config's canonical JSON (first 16 hex digits of SHA-256)."""
    payload = config.model_dump(mode="json") if isinstance(config, BaseModel) else config
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

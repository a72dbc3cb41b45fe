"""Synthetic-data and training configuration, datasets and training logs."""

from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator

from apps.hierarchy.models import LabelHierarchy, Membership, SplitManifest
from apps.losses.models import LossConfig
from apps.mixing.models import MixConfig

Array = npt.NDArray[np.float64]

# Node-id prefixes per level of the synthetic hierarchy: coarse, mid, fine
LEVEL_PREFIXES = ("c", "m", "f")


class SynthConfig(BaseModel):
    """Hierarchical Gaussian-mixture data.

    Siblings sit on a regular simplex of radius ``scale * sqrt(dims)`` around their parent,
    with one scale per level, so finer holdouts sit closer to their in-distribution siblings.
    Every level needs ``branching - 1`` of the ``dims`` coordinates. Leaf ids look like
    ``c0.m1.f1`` (coarse 0, mid 1, fine 1).

    The outlier pool mixes a broad normal background (``outlier_sigma``) with
    ``outlier_domains`` foreign clusters at ``true_ood_offset``; ``outlier_domain_fraction``
    of the pool comes from the clusters.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    branching: list[int] = Field(default_factory=lambda: [4, 3, 2], min_length=1, max_length=3)
    dims: PositiveInt = 8
    level_scales: list[float] = Field(default_factory=lambda: [1.0, 0.4, 0.15])
    noise_sigma: float = Field(default=0.1, gt=0, allow_inf_nan=False)
    train_per_leaf: PositiveInt = 200
    test_per_leaf: PositiveInt = 50
    holdouts: list[str] = Field(
        default_factory=lambda: ["c3=L1", "c2.m2=L2", "c0.m1.f1=L3", "c1.m0.f1=L3"],
    )
    true_ood_offset: float = Field(default=6.0, ge=0, allow_inf_nan=False)
    true_ood_sigma: float = Field(default=0.5, gt=0, allow_inf_nan=False)
    true_ood_samples: int = Field(default=200, ge=0)
    outlier_pool_size: PositiveInt = 2000
    outlier_sigma: float = Field(default=2.5, gt=0, allow_inf_nan=False)
    outlier_domains: PositiveInt = 4
    outlier_domain_fraction: float = Field(default=0.5, ge=0, le=1, allow_inf_nan=False)
    seed: int = 0

    @field_validator("branching", mode="after")
    @classmethod
    def check_branching(cls, v: list[int]) -> list[int]:
        """At least two children per node at every level"""
        if any(b < 2 for b in v):
            raise ValueError(f"branching must be >= 2 at every level, got {v}")
        return v

    @model_validator(mode="after")
    def check_scales(self) -> "SynthConfig":
        """One positive, strictly decreasing scale per level and room for every level's simplex"""
        scales = self.level_scales
        if len(scales) != len(self.branching):
            raise ValueError(f"level_scales needs {len(self.branching)} entries, got {len(scales)}")
        if any(s <= 0 or not np.isfinite(s) for s in scales):
            raise ValueError(f"level_scales must be positive, got {scales}")
        if any(coarse <= fine for coarse, fine in zip(scales, scales[1:])):
            raise ValueError(f"level_scales must strictly decrease from coarse to fine, got {scales}")
        needed = sum(b - 1 for b in self.branching)
        if needed > self.dims:
            raise ValueError(f"branching {self.branching} needs at least {needed} dims, got {self.dims}")
        return self

    @property
    def num_leaves(self) -> int:
        return int(np.prod(self.branching))


class Optimizer(StrEnum):
    SGD = "sgd"
    SGD_MOMENTUM = "sgd_momentum"


class TrainConfig(BaseModel):
    """Minibatch SGD over the ID training set with the configured objective."""

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    epochs: PositiveInt = 50
    batch_size: PositiveInt = 20
    # 0 is allowed and leaves the parameters untouched
    learning_rate: float = Field(default=0.05, ge=0, allow_inf_nan=False)
    optimizer: Optimizer = Field(default=Optimizer.SGD, strict=False)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    hidden_sizes: list[PositiveInt] = Field(default_factory=lambda: [64])
    loss: LossConfig = Field(default_factory=LossConfig)
    mix: MixConfig = Field(default_factory=MixConfig)
    seed: int = 0

    def layer_sizes(self, input_dim: int, num_classes: int) -> list[int]:
        return [input_dim, *self.hidden_sizes, num_classes]


@dataclass(frozen=True)
class TestSet:
    """Test inputs of one membership; ``labels`` are class indices for ID and -1 otherwise."""

    __test__ = False

    x: Array
    labels: npt.NDArray[np.int64]

    def __len__(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class SyntheticData:
    """Everything a training run and its evaluation need."""

    hierarchy: LabelHierarchy
    manifest: SplitManifest
    train_x: Array
    train_y: npt.NDArray[np.int64]
    test_sets: dict[Membership, TestSet]
    outlier_x: Array
    config: SynthConfig | None = None
    leaf_centers: dict[str, Array] = field(default_factory=dict, compare=False)
    true_ood_center: Array | None = field(default=None, compare=False)

    @property
    def num_classes(self) -> int:
        return self.manifest.num_classes

    @property
    def input_dim(self) -> int:
        return self.train_x.shape[1]


class EpochLog(BaseModel):
    """One line of a training log: epoch means of each loss term."""

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    epoch: int
    ce: float
    out_term: float
    in_term: float
    out_weight: float
    in_weight: float
    total: float
    mean_lambda: float | None = None

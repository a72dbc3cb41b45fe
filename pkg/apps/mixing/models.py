"""Mixing configuration and mixed batches."""

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field


class MixOp(StrEnum):
    """How two inputs are blended: convex combination or box cut-and-paste."""

    LINEAR = "linear"
    CUT = "cut"


class MixKind(StrEnum):
    """Virtual-out blends ID with outliers; virtual-in blends two ID samples."""

    VIRTUAL_OUT = "virtual_out"
    VIRTUAL_IN = "virtual_in"


class MixConfig(BaseModel):
    """Mix operation and the Beta(alpha, alpha) distribution of the per-batch coefficient.

    ``rng_seed`` joins the training seed in seeding each batch's outlier and mixing draws, so
    those draws can be varied without touching initialization or shuffling.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    op: MixOp = Field(default=MixOp.LINEAR, strict=False)
    alpha: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    rng_seed: int = Field(default=0, ge=0)


@dataclass(frozen=True)
class MixedBatch:
    """Blended inputs with their soft targets; every row shares ``lambda_used``.

    For cut mixing ``lambda_used`` is the realized fraction of pixels kept from the first input.
    """

    xs: npt.NDArray[np.float64]
    ys: npt.NDArray[np.float64]
    lambda_used: float
    kind: MixKind

    def __len__(self) -> int:
        return len(self.xs)


@dataclass(frozen=True)
class CutBox:
    """Half-open pixel box ``[top, bottom) x [left, right)`` on an H x W grid."""

    top: int
    bottom: int
    left: int
    right: int
    height: int
    width: int

    @property
    def area(self) -> int:
        return (self.bottom - self.top) * (self.right - self.left)

    @property
    def kept_fraction(self) -> float:
        """Fraction of the grid left untouched by the cut."""
        total = self.height * self.width
        return (total - self.area) / total

    def mask(self) -> npt.NDArray[np.bool_]:
        """Boolean H x W mask, True inside the box."""
        mask = np.zeros((self.height, self.width), dtype=bool)
        mask[self.top : self.bottom, self.left : self.right] = True
        return mask

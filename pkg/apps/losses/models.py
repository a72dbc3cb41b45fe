"""Loss configuration, batch containers and per-term loss values."""

from dataclasses import dataclass
from enum import StrEnum
from typing import Annotated

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

Array = npt.NDArray[np.float64]
FiniteFloat = Annotated[float, Field(allow_inf_nan=False)]
Weight = Annotated[float, Field(ge=0.0, allow_inf_nan=False)]


class LossKind(StrEnum):
    BASELINE = "baseline"
    OE = "oe"
    ENERGY = "energy"
    MIXOE = "mixoe"
    TERNARY_MIXOE = "ternary_mixoe"


class LossConfig(BaseModel):
    """Objective and its weights.

    ``beta`` weights the virtual-out term and ``gamma`` the virtual-in term of the mixed
    objectives. ``m_in`` and ``m_out`` are signed free-energy margins (free energy is
    ``-logsumexp(logits)``, so ID samples should sit below ``m_in`` and outliers above
    ``m_out``); ``energy_weight`` scales both squared-hinge penalties.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    kind: LossKind = Field(default=LossKind.BASELINE, strict=False)
    beta: Weight = 5.0
    gamma: Weight = 1.0
    oe_weight: Weight = 0.5
    m_in: FiniteFloat = -25.0
    m_out: FiniteFloat = -7.0
    energy_weight: Weight = 0.1

    @property
    def needs_outliers(self) -> bool:
        """Whether the objective consumes raw outliers (OE, energy)."""
        return self.kind in (LossKind.OE, LossKind.ENERGY)

    @property
    def needs_virtual_out(self) -> bool:
        return self.kind in (LossKind.MIXOE, LossKind.TERNARY_MIXOE)

    @property
    def needs_virtual_in(self) -> bool:
        return self.kind is LossKind.TERNARY_MIXOE and self.gamma > 0


@dataclass(frozen=True)
class TargetedLogits:
    """Logits (n, K) with their soft targets (n, K)."""

    logits: Array
    targets: Array


@dataclass(frozen=True)
class BatchTriplet:
    """Logits of the ID batch and of the optional virtual-out, virtual-in and outlier batches."""

    in_batch: TargetedLogits
    virtual_out_batch: TargetedLogits | None = None
    virtual_in_batch: TargetedLogits | None = None
    outlier_logits: Array | None = None


@dataclass(frozen=True)
class TrainingBatch:
    """Model inputs for one optimization step, mirroring ``BatchTriplet`` before the forward pass."""

    in_x: Array
    in_targets: Array
    virtual_out_x: Array | None = None
    virtual_out_targets: Array | None = None
    virtual_in_x: Array | None = None
    virtual_in_targets: Array | None = None
    outlier_x: Array | None = None


@dataclass(frozen=True)
class LossTerms:
    """Loss split into its terms; ``total = ce + out_weight * out_term + in_weight * in_term``.

    For OE the out-term is the outliers' cross-entropy to uniform; for the energy objective the
    out-term and in-term are the outlier and ID squared-hinge penalties; for the mixed objectives
    they are the virtual-out and virtual-in cross-entropies.
    """

    ce: float
    out_term: float = 0.0
    in_term: float = 0.0
    out_weight: float = 0.0
    in_weight: float = 0.0

    @property
    def total(self) -> float:
        return combine_terms(self.ce, self.out_weight, self.out_term, self.in_weight, self.in_term)

    def as_dict(self) -> dict[str, float]:
        return {
            "ce": self.ce,
            "out_term": self.out_term,
            "in_term": self.in_term,
            "out_weight": self.out_weight,
            "in_weight": self.in_weight,
            "total": self.total,
        }


def combine_terms(ce: float, out_weight: float, out_term: float, in_weight: float, in_term: float) -> float:
    """Weighted sum ``ce + out_weight * out_term + in_weight * in_term``."""
    return ce + out_weight * out_term + in_weight * in_term

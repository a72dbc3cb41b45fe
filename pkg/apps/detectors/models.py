"""Detector configuration."""

from enum import StrEnum

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

# One sample's logits (K,) or a batch of them (n, K), float64
Logits = npt.NDArray[np.float64]

# Temperature of the scaled-MSP detector row ("MSP (t=1000)")
SCALED_MSP_TEMPERATURE = 1000.0


class DetectorKind(StrEnum):
    MSP = "msp"
    MSP_TEMP = "msp-temp"
    ENERGY = "energy"


class DetectorConfig(BaseModel):
    """Which detector to apply and at what temperature.

    Every detector's score is oriented so that higher means more in-distribution.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    kind: DetectorKind = Field(default=DetectorKind.MSP, strict=False)
    temperature: float = Field(default=1.0, gt=0, allow_inf_nan=False)

    @classmethod
    def for_kind(cls, kind: DetectorKind | str, temperature: float | None = None) -> "DetectorConfig":
        """Config with the kind's usual temperature (1000 for ``msp-temp``, 1 otherwise)."""
        kind = DetectorKind(kind)
        if temperature is None:
            temperature = SCALED_MSP_TEMPERATURE if kind is DetectorKind.MSP_TEMP else 1.0
        return cls(kind=kind, temperature=temperature)

    @property
    def label(self) -> str:
        """Short name used in reports, e.g. ``msp`` or ``msp(t=1000)``."""
        if self.kind is DetectorKind.MSP_TEMP:
            return f"msp(t={self.temperature:g})"
        if self.temperature != 1.0:
            return f"{self.kind.value}(t={self.temperature:g})"
        return self.kind.value

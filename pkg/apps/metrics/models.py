"""Score records, ROC curves and metric reports.

``ScoreRecord`` is one line of a scores file and ``MetricReport`` is the report file, so both
are pydantic schemas. ``RocCurve`` only lives in memory.
"""

from dataclasses import dataclass
from typing import Annotated

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.hierarchy.models import Membership
from fine_grained_ood import __version__

FiniteFloat = Annotated[float, Field(allow_inf_nan=False)]
Fraction = Annotated[float, Field(ge=0.0, le=1.0)]

# Row names in report order
ALL_ROW = "All"
SEMANTIC_TRUE_ROW = "ST"


class ScoreRecord(BaseModel):
    """One scored (or still-to-be-scored) test sample."""

    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)

    record_id: str = Field(min_length=1)
    membership: Membership = Field(strict=False)
    score: FiniteFloat | None = None
    logits: list[FiniteFloat] | None = None
    true_class: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def check_payload(self) -> "ScoreRecord":
        """A record carries a score, logits or both"""
        if self.score is None and self.logits is None:
            raise ValueError(f"Record {self.record_id!r} has neither score nor logits")
        return self

    @property
    def num_classes(self) -> int | None:
        return len(self.logits) if self.logits is not None else None


@dataclass(frozen=True)
class RocCurve:
    """ROC points for the rule "score >= threshold predicts positive".

    ``thresholds`` descend from +inf (nothing predicted positive, point (0, 0)) through every
    distinct score down to the minimum (everything predicted positive, point (1, 1)).
    """

    thresholds: npt.NDArray[np.float64]
    tpr: npt.NDArray[np.float64]
    fpr: npt.NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.thresholds)


class MetricRow(BaseModel):
    """AUROC and FPR at 95% TPR for one positive-vs-negative comparison."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    set_name: str = Field(alias="set")
    auroc: Fraction
    fpr_at_95tpr: Fraction = Field(alias="fpr95")
    n_pos: int = Field(ge=1)
    n_neg: int = Field(ge=1)


class TernarySummary(BaseModel):
    """Two-threshold split of scores into ID, semantic OOD and true OOD.

    ``confusion[i][j]`` counts records of true group ``i`` predicted as group ``j``, with
    groups ordered ID, semantic, true.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    tau_high: float
    tau_low: float
    confusion: list[list[int]]


class ReportProvenance(BaseModel):
    """Where a report came from."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    hierarchy_id: str | None = None
    rule_hash: str | None = None
    config_hash: str | None = None
    seed: int | None = None
    tool_version: str = __version__


class MetricReport(BaseModel):
    """Rows in the order L1, L2, L3, All, ST plus ID accuracy when labels were available."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    rows: list[MetricRow]
    id_accuracy: Fraction | None = None
    detector: str | None = None
    provenance: ReportProvenance = Field(default_factory=ReportProvenance)
    ternary: TernarySummary | None = None

    def row(self, set_name: str) -> MetricRow | None:
        return next((row for row in self.rows if row.set_name == set_name), None)

    @property
    def set_names(self) -> list[str]:
        return [row.set_name for row in self.rows]

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        return cls.model_validate_json(text)


class ScoreHistogram(BaseModel):
    """Binned score counts per membership group (ID, semantic, true), sharing one set of edges."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    edges: list[float]
    counts: dict[str, list[int]]

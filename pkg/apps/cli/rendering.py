"""Aggregate tables of metric reports.

Rows are methods, columns the report rows L1, L2, L3, All and ST plus ID accuracy. A cell
reads ``AUROC / FPR`` in percent with two decimals, rounded half to even; with more than
one run each number is followed by ``± sd`` (sample standard deviation). A column a method
has no data for stays blank.
"""

import csv
import io
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from apps.metrics.models import ALL_ROW, SEMANTIC_TRUE_ROW, MetricReport

from .exceptions import DataFileError

METRIC_COLUMNS = ("L1", "L2", "L3", ALL_ROW, SEMANTIC_TRUE_ROW)
HEADER = ("Method", "Runs", *METRIC_COLUMNS, "ID Acc")
CELL_SEPARATOR = " / "
SD_SEPARATOR = " ± "
TWO_PLACES = Decimal("0.01")


@dataclass(frozen=True)
class CellStats:
    """Mean and sample standard deviation of one number over runs; ``sd`` is None for one run."""

    mean: float
    sd: float | None
    n: int

    @classmethod
    def of(cls, values: Sequence[float]) -> "CellStats":
        array = np.asarray(values, dtype=np.float64)
        sd = float(np.std(array, ddof=1)) if len(array) > 1 else None
        return cls(mean=float(np.mean(array)), sd=sd, n=len(array))


@dataclass(frozen=True)
class AggregateRow:
    method: str
    runs: int
    cells: dict[str, tuple[CellStats, CellStats]]
    id_accuracy: CellStats | None = None


@dataclass(frozen=True)
class Table:
    """Rendered cell text, ready for CSV or aligned output."""

    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return buffer.getvalue()

    def to_text(self) -> str:
        """Columns padded to their widest cell; the method column is left-aligned, the rest right-aligned."""
        widths = [max(len(row[i]) for row in (self.header, *self.rows)) for i in range(len(self.header))]

        def line(cells: tuple[str, ...]) -> str:
            parts = [
                cell.ljust(width) if index == 0 else cell.rjust(width)
                for index, (cell, width) in enumerate(zip(cells, widths, strict=True))
            ]
            return "  ".join(parts).rstrip()

        rule = "  ".join("-" * width for width in widths)
        return "\n".join([line(self.header), rule, *(line(row) for row in self.rows)]) + "\n"


def format_percent(value: float) -> str:
    """A fraction as a percentage with two decimals, rounded half to even (1/32 gives ``3.12``)."""
    return str((Decimal(repr(float(value))) * 100).quantize(TWO_PLACES, rounding=ROUND_HALF_EVEN))


def format_stats(stats: CellStats) -> str:
    text = format_percent(stats.mean)
    if stats.sd is not None:
        text += f"{SD_SEPARATOR}{format_percent(stats.sd)}"
    return text


def aggregate_reports(reports: Mapping[str, Sequence[MetricReport]]) -> list[AggregateRow]:
    """Mean and sample standard deviation of every cell, per method.

    Args:
        reports: Reports per method name (typically one per seed); method order is kept

    Returns:
        list[AggregateRow]: One row per method
    """
    rows = []
    for method, method_reports in reports.items():
        cells = {}
        for column in METRIC_COLUMNS:
            present = [row for report in method_reports if (row := report.row(column)) is not None]
            if present:
                cells[column] = (
                    CellStats.of([row.auroc for row in present]),
                    CellStats.of([row.fpr_at_95tpr for row in present]),
                )
        accuracies = [report.id_accuracy for report in method_reports if report.id_accuracy is not None]
        rows.append(
            AggregateRow(
                method=method,
                runs=len(method_reports),
                cells=cells,
                id_accuracy=CellStats.of(accuracies) if accuracies else None,
            )
        )
    return rows


def table_from_rows(rows: Sequence[AggregateRow]) -> Table:
    body = []
    for row in rows:
        cells = [
            f"{format_stats(row.cells[column][0])}{CELL_SEPARATOR}{format_stats(row.cells[column][1])}"
            if column in row.cells
            else ""
            for column in METRIC_COLUMNS
        ]
        accuracy = format_stats(row.id_accuracy) if row.id_accuracy is not None else ""
        body.append((row.method, str(row.runs), *cells, accuracy))
    return Table(header=HEADER, rows=tuple(body))


def render_table(reports: Mapping[str, Sequence[MetricReport]]) -> Table:
    """Aggregate reports per method and lay them out with a fixed column order.

    Raises:
        DataFileError: If no report is given
    """
    if not reports or not any(reports.values()):
        raise DataFileError("No reports to render")
    return table_from_rows(aggregate_reports(reports))


def parse_table_csv(text: str) -> Table:
    """Read a CSV written by ``Table.to_csv``.

    Raises:
        DataFileError: If the header differs from the expected columns or a row is ragged
    """
    reader = csv.reader(io.StringIO(text))
    lines = [tuple(line) for line in reader if line]
    if not lines or lines[0] != HEADER:
        raise DataFileError(f"Table header must be {', '.join(HEADER)}")
    for line_number, line in enumerate(lines[1:], start=2):
        if len(line) != len(HEADER):
            raise DataFileError(f"Row has {len(line)} cells, expected {len(HEADER)}", line_number=line_number)
    return Table(header=lines[0], rows=tuple(lines[1:]))

"""Reading and writing the toolkit's data files.

Scores files are UTF-8 JSON lines, one ``ScoreRecord`` per line::

    {"record_id": "a-1", "membership": "ID", "logits": [2.0, 0.1, -1.0], "true_class": 0}
    {"record_id": "b-7", "membership": "OOD_L2", "logits": [0.4, 0.3, 0.2]}

Within a file every line carries the same payload fields (``logits``, ``score`` or both)
and every logit vector has the same length.
"""

import json
from collections.abc import Iterable
from pathlib import Path

import logfire
from pydantic import ValidationError

from apps.hierarchy.models import SplitManifest
from apps.metrics.models import MetricReport, ScoreRecord

from .exceptions import DataFileError


def _payload_fields(record: ScoreRecord) -> frozenset[str]:
    return frozenset(name for name in ("score", "logits") if getattr(record, name) is not None)


def _first_error(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    return f"{location}: {first['msg']}" if location else first["msg"]


def parse_score_lines(lines: Iterable[str], path: str | Path | None = None) -> list[ScoreRecord]:
    """Validate score lines, attaching the 1-based line number to every error.

    Raises:
        DataFileError: On a malformed line, an unknown membership, mixed payload fields or a
            logit vector whose length differs from the first one
    """
    records: list[ScoreRecord] = []
    fields: frozenset[str] | None = None
    num_classes: int | None = None
    seen_ids: set[str] = set()

    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = ScoreRecord.model_validate_json(line)
        except ValidationError as e:
            raise DataFileError(_first_error(e), path, line_number) from e

        record_fields = _payload_fields(record)
        if fields is None:
            fields = record_fields
        elif record_fields != fields:
            raise DataFileError(
                f"Record {record.record_id!r} carries {sorted(record_fields)} but earlier records carry "
                f"{sorted(fields)}; a scores file must be homogeneous",
                path,
                line_number,
            )
        if record.logits is not None:
            if num_classes is None:
                num_classes = len(record.logits)
            elif len(record.logits) != num_classes:
                raise DataFileError(
                    f"Record {record.record_id!r} has {len(record.logits)} logits, earlier records have {num_classes}",
                    path,
                    line_number,
                )
        if record.record_id in seen_ids:
            raise DataFileError(f"Duplicate record id {record.record_id!r}", path, line_number)
        seen_ids.add(record.record_id)
        records.append(record)
    return records


def ingest_scores(path: str | Path) -> list[ScoreRecord]:
    """Read a scores file.

    Args:
        path: JSON-lines file of score records

    Returns:
        list[ScoreRecord]: Validated records in file order

    Raises:
        DataFileError: If the file is missing or any line is invalid (with its line number)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise DataFileError("Scores file does not exist", path) from e
    except UnicodeDecodeError as e:
        raise DataFileError(f"Scores file is not UTF-8: {e}", path) from e

    records = parse_score_lines(text.splitlines(), path)
    logfire.info("Scores ingested", path=str(path), records=len(records))
    return records


def write_scores(records: Iterable[ScoreRecord], path: str | Path) -> Path:
    """Write records as JSON lines, omitting unset optional fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record.model_dump_json(exclude_none=True) + "\n")
    return path


def read_report(path: str | Path) -> MetricReport:
    path = Path(path)
    try:
        return MetricReport.from_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise DataFileError("Report file does not exist", path) from e
    except ValidationError as e:
        raise DataFileError(f"Invalid report: {_first_error(e)}", path) from e


def write_report(report: MetricReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json(), encoding="utf-8")
    return path


def read_manifest(path: str | Path) -> SplitManifest:
    path = Path(path)
    try:
        return SplitManifest.from_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise DataFileError("Manifest file does not exist", path) from e
    except ValidationError as e:
        raise DataFileError(f"Invalid manifest: {_first_error(e)}", path) from e


def write_json(payload: dict | list, path: str | Path) -> Path:
    """Write plain JSON data (histograms, failure lists) with a trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path

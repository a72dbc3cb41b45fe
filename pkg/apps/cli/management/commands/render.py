"""Management command to render metric reports as a table.

Repeating a method name aggregates its reports into mean ± sd cells. ``--out table.csv``
writes the CSV and an aligned-text ``table.txt`` beside it.

Usage:
    python manage.py render --report MixOE=runs/mixoe/seed-0/report.json --report MixOE=runs/mixoe/seed-1/report.json \\
        --report Baseline=runs/baseline/seed-0/report.json --out table.csv
    python manage.py render --from-csv aggregate.csv
"""

from pathlib import Path

from apps.cli.base import ToolCommand
from apps.cli.exceptions import ConfigError
from apps.cli.io import read_report
from apps.cli.rendering import Table, parse_table_csv, render_table
from apps.metrics.models import MetricReport


class Command(ToolCommand):
    """Render reports (or a previously written CSV) as CSV plus aligned text."""

    help = "Render metric reports as an AUROC / FPR table, one row per method"

    def add_command_arguments(self, parser):
        parser.add_argument(
            "--report",
            action="append",
            default=[],
            metavar="NAME=PATH",
            help="A method's report file (repeat a name to aggregate seeds)",
        )
        parser.add_argument("--from-csv", help="Re-render a table CSV instead of reports")

    def collect(self, specs: list[str]) -> dict[str, list[MetricReport]]:
        reports: dict[str, list[MetricReport]] = {}
        for spec in specs:
            name, sep, path = spec.partition("=")
            if not sep or not name.strip() or not path.strip():
                raise ConfigError(f"--report {spec!r} must look like NAME=PATH", key="report")
            reports.setdefault(name.strip(), []).append(read_report(path.strip()))
        return reports

    def run(self, **options):
        if options["from_csv"]:
            table: Table = parse_table_csv(Path(options["from_csv"]).read_text(encoding="utf-8"))
        elif options["report"]:
            table = render_table(self.collect(options["report"]))
        else:
            raise ConfigError("Give --report NAME=PATH at least once, or --from-csv", key="report")

        self.info(table.to_text())
        if options["out"]:
            out = self.resolve_out(options["out"])
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(table.to_csv(), encoding="utf-8")
            out.with_suffix(".txt").write_text(table.to_text(), encoding="utf-8")
            self.success(f"Wrote {out} and {out.with_suffix('.txt')}")

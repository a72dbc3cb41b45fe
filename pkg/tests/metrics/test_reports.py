"""Tests for hierarchical, semantic-vs-true and ternary reports."""

import tempfile
from io import StringIO
from pathlib import Path

import logfire
import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from apps.cli.io import read_report, write_scores
from apps.cli.rendering import HEADER, parse_table_csv
from apps.hierarchy.models import Membership
from apps.hierarchy.parser import parse_hierarchy
from apps.hierarchy.splits import compile_split, emit_manifest
from apps.metrics.exceptions import MissingMembershipError, UndefinedMetricError, UnscoredRecordError
from apps.metrics.models import MetricReport, ScoreRecord
from apps.metrics.reports import (
    full_report,
    hierarchical_report,
    id_accuracy,
    score_histograms,
    semantic_true_report,
    ternary_threshold_summary,
)
from apps.metrics.roc import auroc

# Configure logfire for tests - ignore if not configured to avoid warnings
logfire.configure(send_to_logfire=False, console=False)


def scored(membership: Membership, scores, prefix: str | None = None) -> list[ScoreRecord]:
    prefix = prefix or membership.value
    return [
        ScoreRecord(record_id=f"{prefix}-{index}", membership=membership, score=float(score))
        for index, score in enumerate(scores)
    ]


class HierarchicalReportTestCase(SimpleTestCase):
    def test_far_levels_separate_better(self):
        rng = np.random.default_rng(0)
        id_scores = rng.normal(3.0, 1.0, size=200)
        l1 = rng.normal(0.0, 1.0, size=100)
        l2 = rng.normal(1.5, 1.0, size=100)
        l3 = rng.normal(2.7, 1.0, size=100)
        records = [
            *scored(Membership.ID, id_scores),
            *scored(Membership.OOD_L1, l1),
            *scored(Membership.OOD_L2, l2),
            *scored(Membership.OOD_L3, l3),
        ]

        report = hierarchical_report(records, detector="msp")

        self.assertEqual(report.set_names, ["L1", "L2", "L3", "All"])
        self.assertGreater(report.row("L1").auroc, report.row("L2").auroc)
        self.assertGreater(report.row("L2").auroc, report.row("L3").auroc)
        self.assertAlmostEqual(report.row("L3").auroc, auroc(id_scores, l3))
        self.assertAlmostEqual(report.row("All").auroc, auroc(id_scores, np.concatenate([l1, l2, l3])))
        self.assertEqual(report.row("All").n_neg, 300)

    def test_single_level_all_row_repeats_it(self):
        records = [*scored(Membership.ID, [0.9, 0.7, 0.6]), *scored(Membership.OOD_L2, [0.65, 0.2])]
        report = hierarchical_report(records)

        self.assertEqual(report.set_names, ["L2", "All"])
        self.assertEqual(report.row("L2").auroc, report.row("All").auroc)
        self.assertEqual(report.row("L2").fpr_at_95tpr, report.row("All").fpr_at_95tpr)

    def test_true_ood_not_in_hierarchical_rows(self):
        records = [
            *scored(Membership.ID, [0.9, 0.8]),
            *scored(Membership.OOD_L1, [0.1]),
            *scored(Membership.TRUE_OOD, [0.95]),
        ]
        self.assertEqual(hierarchical_report(records).row("All").auroc, 1.0)

    def test_missing_groups(self):
        with self.assertRaises(MissingMembershipError):
            hierarchical_report(scored(Membership.OOD_L1, [0.1]))
        with self.assertRaises(MissingMembershipError):
            hierarchical_report(scored(Membership.ID, [0.1]))

    def test_unscored_record(self):
        records = [
            ScoreRecord(record_id="a", membership=Membership.ID, logits=[1.0, 0.0]),
            *scored(Membership.OOD_L1, [0.1]),
        ]
        with self.assertRaises(UnscoredRecordError) as ctx:
            hierarchical_report(records)
        self.assertEqual(ctx.exception.record_id, "a")


class SemanticTrueTestCase(SimpleTestCase):
    def test_perfect_and_indistinguishable(self):
        separated = [*scored(Membership.OOD_L1, [0.6, 0.7]), *scored(Membership.TRUE_OOD, [0.1, 0.2])]
        self.assertEqual(semantic_true_report(separated).auroc, 1.0)
        self.assertEqual(semantic_true_report(separated).fpr_at_95tpr, 0.0)

        same = [*scored(Membership.OOD_L2, [0.1, 0.2, 0.3]), *scored(Membership.TRUE_OOD, [0.1, 0.2, 0.3])]
        self.assertEqual(semantic_true_report(same).auroc, 0.5)

    def test_hand_built_pairs(self):
        """Semantic {0.5, 0.3, 0.3} against true {0.4, 0.3, 0.1}: 3 + 1.5 + 1.5 wins of 9."""
        records = [
            *scored(Membership.OOD_L1, [0.5], "a"),
            *scored(Membership.OOD_L3, [0.3, 0.3], "b"),
            *scored(Membership.TRUE_OOD, [0.4, 0.3, 0.1]),
        ]
        row = semantic_true_report(records)
        self.assertEqual(row.set_name, "ST")
        self.assertAlmostEqual(row.auroc, 6.0 / 9.0)

    def test_needs_true_ood(self):
        with self.assertRaises(MissingMembershipError):
            semantic_true_report(scored(Membership.OOD_L1, [0.5]))

    def test_over_exuberant_detector(self):
        """OOD of both kinds pushed equally far below ID: strong L rows, chance-level ST."""
        rng = np.random.default_rng(4)
        low = rng.uniform(0.0, 0.3, size=200)
        records = [
            *scored(Membership.ID, rng.uniform(0.7, 1.0, size=100)),
            *scored(Membership.OOD_L1, low[:100]),
            *scored(Membership.TRUE_OOD, low[100:]),
        ]
        report = full_report(records)
        self.assertEqual(report.row("L1").auroc, 1.0)
        self.assertAlmostEqual(report.row("ST").auroc, 0.5, delta=0.1)


class IdAccuracyTestCase(SimpleTestCase):
    def labeled(self, logits, labels) -> list[ScoreRecord]:
        return [
            ScoreRecord(record_id=f"id-{i}", membership=Membership.ID, logits=row, true_class=label)
            for i, (row, label) in enumerate(zip(logits, labels, strict=True))
        ]

    def test_all_correct(self):
        self.assertEqual(id_accuracy(self.labeled([[2.0, 0.0], [0.0, 2.0]], [0, 1])), 1.0)

    def test_ties_go_to_lowest_index(self):
        records = self.labeled([[1.0, 1.0, 1.0]] * 4, [0, 2, 0, 1])
        self.assertEqual(id_accuracy(records), 0.5)

    def test_hand_count(self):
        records = self.labeled([[3.0, 1.0], [0.0, 1.0], [5.0, 4.0], [0.2, 0.1], [1.0, 2.0]], [0, 1, 1, 1, 1])
        self.assertEqual(id_accuracy(records), 3 / 5)

    def test_ood_records_ignored(self):
        records = [
            *self.labeled([[2.0, 0.0]], [0]),
            ScoreRecord(record_id="o", membership=Membership.OOD_L1, logits=[0.0, 5.0], true_class=0),
        ]
        self.assertEqual(id_accuracy(records), 1.0)

    def test_undefined_without_labels(self):
        with self.assertRaises(UndefinedMetricError):
            id_accuracy(scored(Membership.ID, [0.3]))


class TernarySummaryTestCase(SimpleTestCase):
    def test_separated_groups_give_diagonal_confusion(self):
        records = [
            *scored(Membership.ID, np.linspace(0.8, 0.9, 10)),
            *scored(Membership.OOD_L2, np.linspace(0.4, 0.5, 10)),
            *scored(Membership.TRUE_OOD, np.linspace(0.0, 0.1, 10)),
        ]
        summary = ternary_threshold_summary(records)

        self.assertEqual(summary.tau_high, 0.8)
        self.assertEqual(summary.tau_low, 0.4)
        self.assertEqual(summary.confusion, [[10, 0, 0], [0, 10, 0], [0, 0, 10]])

    def test_identical_scores_collapse_to_one_column(self):
        records = [
            *scored(Membership.ID, [0.5] * 3),
            *scored(Membership.OOD_L1, [0.5] * 2),
            *scored(Membership.TRUE_OOD, [0.5] * 4),
        ]
        summary = ternary_threshold_summary(records)
        self.assertEqual(summary.tau_high, summary.tau_low)
        self.assertEqual(summary.confusion, [[3, 0, 0], [2, 0, 0], [4, 0, 0]])

    def test_needs_all_groups(self):
        with self.assertRaises(MissingMembershipError):
            ternary_threshold_summary([*scored(Membership.ID, [0.5]), *scored(Membership.OOD_L1, [0.4])])


class HistogramTestCase(SimpleTestCase):
    def test_shared_edges(self):
        records = [
            *scored(Membership.ID, [0.9, 1.0]),
            *scored(Membership.OOD_L1, [0.5]),
            *scored(Membership.TRUE_OOD, [0.0]),
        ]
        histogram = score_histograms(records, bins=4)

        self.assertEqual(histogram.edges, [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertEqual(histogram.counts["ID"], [0, 0, 0, 2])
        self.assertEqual(histogram.counts["semantic"], [0, 0, 1, 0])
        self.assertEqual(histogram.counts["true"], [1, 0, 0, 0])


class FullReportTestCase(SimpleTestCase):
    def records(self) -> list[ScoreRecord]:
        return [
            ScoreRecord(record_id="i0", membership=Membership.ID, score=0.9, logits=[2.0, 0.0], true_class=0),
            ScoreRecord(record_id="i1", membership=Membership.ID, score=0.8, logits=[0.0, 2.0], true_class=0),
            *scored(Membership.OOD_L1, [0.2]),
            *scored(Membership.OOD_L3, [0.85]),
            *scored(Membership.TRUE_OOD, [0.1]),
        ]

    def test_row_order_and_extras(self):
        report = full_report(self.records(), detector="msp")

        self.assertEqual(report.set_names, ["L1", "L3", "All", "ST"])
        self.assertEqual(report.id_accuracy, 0.5)
        self.assertIsNotNone(report.ternary)
        self.assertEqual(report.row("L3").auroc, 0.5)

    def test_json_uses_short_row_keys(self):
        report = full_report(self.records())
        text = report.to_json()

        self.assertIn('"set": "L1"', text)
        self.assertIn('"fpr95"', text)
        self.assertEqual(MetricReport.from_json(text), report)

    def test_record_order_does_not_change_the_report(self):
        rng = np.random.default_rng(5)
        memberships = [Membership.ID] * 60 + [Membership.OOD_L1, Membership.OOD_L2, Membership.OOD_L3] * 20
        memberships += [Membership.TRUE_OOD] * 30
        records = [
            ScoreRecord(
                record_id=f"r{index}",
                membership=membership,
                score=float(rng.integers(0, 20)) / 20,
                logits=rng.normal(size=3).tolist(),
                true_class=int(rng.integers(0, 3)) if membership is Membership.ID else None,
            )
            for index, membership in enumerate(memberships)
        ]
        expected = full_report(records, detector="msp").to_json()

        for _ in range(5):
            shuffled = [records[i] for i in rng.permutation(len(records))]
            self.assertEqual(full_report(shuffled, detector="msp").to_json(), expected)

    def test_no_true_ood_means_no_st_row(self):
        report = full_report(self.records()[:4])
        self.assertNotIn("ST", report.set_names)
        self.assertIsNone(report.ternary)


@override_settings(OUTPUT_DIR=None)
class ReportCommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

        hierarchy = parse_hierarchy("toy\n  a\n    a1\n    a2\n  b\n    b1\n")
        self.manifest_path = self.dir / "manifest.json"
        self.manifest_path.write_text(emit_manifest(compile_split(hierarchy, ["b=L1"])).to_json(), encoding="utf-8")

        self.scores = write_scores(
            [
                ScoreRecord(record_id="i0", membership=Membership.ID, logits=[3.0, 0.0], true_class=0),
                ScoreRecord(record_id="i1", membership=Membership.ID, logits=[0.0, 2.0], true_class=1),
                ScoreRecord(record_id="o0", membership=Membership.OOD_L1, logits=[0.1, 0.0]),
                ScoreRecord(record_id="t0", membership=Membership.TRUE_OOD, logits=[0.0, 0.0]),
            ],
            self.dir / "logits.jsonl",
        )

    def test_logits_are_scored_with_msp(self):
        out = self.dir / "report.json"
        stdout = StringIO()
        call_command(
            "report",
            scores=str(self.scores),
            manifest=str(self.manifest_path),
            histograms=str(self.dir / "hist.json"),
            table=str(self.dir / "tables" / "report.csv"),
            out=str(out),
            stdout=stdout,
        )

        report = read_report(out)
        self.assertEqual(report.detector, "msp")
        self.assertEqual(report.set_names, ["L1", "All", "ST"])
        self.assertEqual(report.row("L1").auroc, 1.0)
        self.assertEqual(report.id_accuracy, 1.0)
        self.assertEqual(report.provenance.hierarchy_id, "toy")
        self.assertTrue((self.dir / "hist.json").is_file())
        self.assertIn("100.00 / 0.00", stdout.getvalue())

        table = parse_table_csv((self.dir / "tables" / "report.csv").read_text(encoding="utf-8"))
        self.assertEqual(table.header, HEADER)
        self.assertEqual(table.rows[0][:3], ("msp", "1", "100.00 / 0.00"))

    def test_no_table_without_flag(self):
        call_command("report", scores=str(self.scores), out=str(self.dir / "report.json"), stdout=StringIO())
        written = sorted(path.name for path in self.dir.iterdir())
        self.assertEqual(written, ["logits.jsonl", "manifest.json", "report.json"])

    def test_membership_outside_split_exits_with_data_code(self):
        write_scores(
            [
                ScoreRecord(record_id="i0", membership=Membership.ID, score=0.9),
                ScoreRecord(record_id="o0", membership=Membership.OOD_L2, score=0.1),
            ],
            self.scores,
        )
        with self.assertRaises(CommandError) as ctx:
            call_command(
                "report",
                scores=str(self.scores),
                manifest=str(self.manifest_path),
                out=str(self.dir / "r.json"),
                stdout=StringIO(),
            )
        self.assertEqual(ctx.exception.returncode, 3)

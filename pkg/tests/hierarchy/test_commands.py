"""Tests for the split management command."""

import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import logfire
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from apps.hierarchy.models import HoldoutLevel, SplitManifest

# Configure logfire for tests - ignore if not configured to avoid warnings
logfire.configure(send_to_logfire=False, console=False)

CONFIGS_DIR = Path(__file__).resolve().parents[2] / "configs"


@override_settings(OUTPUT_DIR=None)
class SplitCommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def test_compile_from_arguments(self):
        spec = self.out / "toy.txt"
        spec.write_text("toy\n  a\n    a1\n    a2\n  b\n    b1\n    b2\n", encoding="utf-8")
        manifest_path = self.out / "manifest.json"

        stdout = StringIO()
        call_command(
            "split",
            "compile",
            hierarchy=str(spec),
            holdout=["b=L1", "a2=L2"],
            out=str(manifest_path),
            stdout=stdout,
        )

        manifest = SplitManifest.from_json(manifest_path.read_text(encoding="utf-8"))
        self.assertEqual(manifest.id_classes, ["a1"])
        self.assertEqual(manifest.ood_sets[HoldoutLevel.L1], ["b1", "b2"])
        self.assertIn("1 ID classes", stdout.getvalue())

    def test_compile_from_bundled_config(self):
        manifest_path = self.out / "fgvc.json"
        call_command(
            "split", "compile", config=str(CONFIGS_DIR / "fgvc_split1.json"), out=str(manifest_path), stdout=StringIO()
        )

        manifest = SplitManifest.from_json(manifest_path.read_text(encoding="utf-8"))
        self.assertEqual(manifest.num_classes, 95)
        self.assertEqual(manifest.provenance.hierarchy_id, "fgvc-aircraft")

    def test_compile_without_holdouts_keeps_every_leaf(self):
        manifest_path = self.out / "all_id.json"
        stdout = StringIO()
        call_command("split", "compile", hierarchy="bundled:fgvc_aircraft", out=str(manifest_path), stdout=stdout)

        manifest = SplitManifest.from_json(manifest_path.read_text(encoding="utf-8"))
        self.assertEqual(manifest.num_classes, 102)
        self.assertTrue(all(not leaves for leaves in manifest.ood_sets.values()))
        self.assertIn("102 ID classes", stdout.getvalue())

    def test_inspect_prints_level_counts(self):
        stdout = StringIO()
        call_command("split", "inspect", hierarchy="bundled:fgvc_aircraft", stdout=stdout)

        output = stdout.getvalue()
        self.assertIn("depth 1: 40 nodes", output)
        self.assertIn("depth 3: 102 nodes", output)

    def test_quiet_run_restores_console_logging(self):
        with mock.patch("apps.cli.base.configure_logfire") as configure:
            stdout = StringIO()
            call_command("split", "inspect", hierarchy="bundled:fgvc_aircraft", quiet=True, stdout=stdout)
            self.assertEqual(stdout.getvalue(), "")
            self.assertEqual(configure.call_args_list, [mock.call(console=False), mock.call()])

            configure.reset_mock()
            with self.assertRaises(CommandError):
                call_command("split", "inspect", hierarchy="bundled:missing", quiet=True, stdout=StringIO())
            self.assertEqual(configure.call_args_list, [mock.call(console=False), mock.call()])

        with mock.patch("apps.cli.base.configure_logfire") as configure:
            call_command("split", "inspect", hierarchy="bundled:fgvc_aircraft", stdout=StringIO())
        configure.assert_not_called()

    def test_bad_holdout_exits_with_config_code(self):
        with self.assertRaises(CommandError) as ctx:
            call_command(
                "split",
                "compile",
                hierarchy="bundled:fgvc_aircraft",
                holdout=["Boeing=L3"],
                out=str(self.out / "m.json"),
                stdout=StringIO(),
            )
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_hierarchy_file_exits_with_data_code(self):
        with self.assertRaises(CommandError) as ctx:
            call_command(
                "split",
                "compile",
                hierarchy=str(self.out / "missing.txt"),
                holdout=["x=L1"],
                out=str(self.out / "m.json"),
                stdout=StringIO(),
            )
        self.assertEqual(ctx.exception.returncode, 3)

    def test_output_dir_override(self):
        override = self.out / "override"
        with override_settings(OUTPUT_DIR=override):
            call_command(
                "split",
                "compile",
                config=str(CONFIGS_DIR / "ships_military.json"),
                out="elsewhere/ships.json",
                stdout=StringIO(),
            )
        self.assertTrue((override / "ships.json").is_file())

import json
import os
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from regularity.config import load_config
from regularity.harness import recompute_verdicts
from regularity.management.commands.lab import output_directory

CONFIGS_DIR = Path(settings.HOLDERLAB["CONFIGS_DIR"])


def lab(*args):
    out = StringIO()
    call_command("lab", *args, stdout=out, stderr=StringIO())
    return out.getvalue()


class ListScenariosTests(SimpleTestCase):
    def test_lists_both_catalogs_with_defaults(self):
        output = lab("list-scenarios")
        self.assertIn("linear_strain", output)
        self.assertIn("lambda=1", output)
        self.assertIn("bahouri_chemin", output)


class ValidateConfigTests(SimpleTestCase):
    def test_shipped_example_is_valid(self):
        output = lab("validate-config", "--config", str(CONFIGS_DIR / "sandwich.yaml"))
        self.assertTrue(output.startswith("OK sandwich"))

    def test_invalid_config_exits_with_one(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.yaml"
            path.write_text((CONFIGS_DIR / "sandwich.yaml").read_text().replace("exponents: [0.5]", "exponents: [1.5]"))
            with self.assertRaises(CommandError) as ctx:
                lab("validate-config", "--config", str(path))
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertTrue(str(ctx.exception).startswith("config: "))
        self.assertIn("holder requires 0 < β ≤ 1", str(ctx.exception))

    def test_override_of_an_unknown_key(self):
        with self.assertRaises(CommandError) as ctx:
            lab("validate-config", "--config", str(CONFIGS_DIR / "sandwich.yaml"), "--set", "time.step=1")
        self.assertEqual(ctx.exception.returncode, 1)


class RunTests(SimpleTestCase):
    def test_zero_velocity_control_exits_cleanly(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = lab("run", "--config", str(CONFIGS_DIR / "flow_zero_velocity.yaml"), "--out", tmp, "--quiet")
            report = json.loads((Path(tmp) / "report.json").read_text())
            self.assertTrue((Path(tmp) / "plots" / "index.json").is_file())
            self.assertTrue((Path(tmp) / "series" / "pairs.csv").is_file())
        self.assertTrue(output.startswith("PASS flow_diagnostics"))
        self.assertEqual(report["status"], "PASS")
        self.assertEqual(recompute_verdicts(report), report["verdicts"])

    def test_indeterminate_exits_with_two(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                lab("run", "--config", str(CONFIGS_DIR / "preservation_misset.yaml"), "--out", tmp, "--quiet")
        self.assertEqual(ctx.exception.returncode, 2)

    def test_failed_verdict_exits_with_three(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                # zero vorticity cannot grow
                lab("run", "--config", str(CONFIGS_DIR / "euler_zero_data.yaml"), "--set", "expect=growth", "--out", tmp, "--quiet")
        self.assertEqual(ctx.exception.returncode, 3)

    def test_unwritable_output_directory_exits_with_one(self):
        with tempfile.TemporaryDirectory() as tmp:
            blocker = Path(tmp) / "file"
            blocker.write_text("not a directory")
            with self.assertRaises(CommandError) as ctx:
                lab("run", "--config", str(CONFIGS_DIR / "flow_zero_velocity.yaml"), "--out", str(blocker / "out"), "--quiet")
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertTrue(str(ctx.exception).startswith("io: "))

    def test_several_configs_get_their_own_directories(self):
        with tempfile.TemporaryDirectory() as tmp:
            lab(
                "run",
                "--config", str(CONFIGS_DIR / "flow_zero_velocity.yaml"),
                "--config", str(CONFIGS_DIR / "sandwich_zero_velocity.yaml"),
                "--out", tmp,
                "--jobs", "2",
                "--quiet",
            )
            names = sorted(p.name for p in Path(tmp).iterdir())
        self.assertEqual(names, ["flow_zero_velocity", "sandwich_zero_velocity"])


class EmitPlotsTests(SimpleTestCase):
    def test_regenerates_the_bundle(self):
        with tempfile.TemporaryDirectory() as tmp:
            lab("run", "--config", str(CONFIGS_DIR / "flow_log_ratio.yaml"), "--out", tmp, "--quiet")
            index = Path(tmp) / "plots" / "index.json"
            before = index.read_text()
            index.unlink()
            output = lab("emit-plots", "--out", tmp)
            self.assertEqual(index.read_text(), before)
        self.assertIn("plot files", output)

    def test_missing_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                lab("emit-plots", "--out", tmp)
        self.assertEqual(ctx.exception.returncode, 1)


class OutputDirectoryTests(SimpleTestCase):
    def test_precedence(self):
        config = load_config(CONFIGS_DIR / "sandwich.yaml", ["output_dir=/tmp/from-config"])
        with mock.patch.dict(os.environ, {"HOLDERLAB_OUT": "/tmp/from-env"}):
            self.assertEqual(output_directory("/tmp/from-flag", config), Path("/tmp/from-flag"))
            self.assertEqual(output_directory(None, config), Path("/tmp/from-env"))
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(output_directory(None, config), Path("/tmp/from-config"))

    @override_settings(HOLDERLAB={**settings.HOLDERLAB, "REPORTS_ROOT": Path("/srv/reports")})
    def test_default_is_named_after_the_config(self):
        config = load_config(CONFIGS_DIR / "sandwich.yaml")
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(output_directory(None, config), Path("/srv/reports/sandwich"))

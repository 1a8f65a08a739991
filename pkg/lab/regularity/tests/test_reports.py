import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from regularity.exceptions import ReportError, ReportWriteError
from regularity.harness import PASS, Report, verdict
from regularity.reports import (
    REPORT_FILE,
    emit_plots,
    file_stem,
    list_reports,
    load_report,
    plot_entries,
    write_report,
)


def tracer_report():
    return Report(
        kind="euler_growth",
        config={"kind": "euler_growth"},
        seed=0,
        series={
            "tracers": [
                {"t": 0.0, "seed_r": 0.02, "x1": 0.02, "x2": 0.04, "radius": 0.0447},
                {"t": 0.5, "seed_r": 0.02, "x1": 0.03, "x2": 0.03, "radius": 0.0424},
            ],
            "unplotted": [{"a": 1.0}],
        },
        verdicts={"tracers": verdict(PASS, "ok")},
    )


class ReportFileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_file_stem(self):
        self.assertEqual(file_stem("profile[holder(0.5)][t=0.25]"), "profile_holder_0.5_t_0.25")
        self.assertEqual(file_stem("budget"), "budget")

    def test_only_known_series_are_plotted(self):
        entries = plot_entries(tracer_report().series)
        self.assertEqual([e["series"] for e in entries], ["tracers"])
        self.assertEqual(entries[0]["x"], "x1")

    def test_layout_and_listing(self):
        written = write_report(tracer_report(), self.root / "run")
        self.assertEqual(written[0], str(self.root / "run" / REPORT_FILE))
        self.assertTrue((self.root / "run" / "series" / "unplotted.csv").is_file())
        header = (self.root / "run" / "plots" / "tracers.csv").read_text().splitlines()[0]
        self.assertEqual(header, "seed_r,x1,x2")
        self.assertEqual(list_reports(self.root), ["run"])
        self.assertEqual(load_report(self.root / "run")["status"], PASS)

    def test_report_json_has_sorted_keys(self):
        write_report(tracer_report(), self.root / "run")
        keys = list(json.loads((self.root / "run" / REPORT_FILE).read_text()))
        self.assertEqual(keys, sorted(keys))

    def test_partial_write_lists_the_files_already_written(self):
        target = self.root / "run"
        target.mkdir()
        (target / "series").write_text("in the way")
        with self.assertRaises(ReportWriteError) as ctx:
            write_report(tracer_report(), target)
        self.assertEqual(ctx.exception.written, [str(target / REPORT_FILE)])

    def test_emit_plots_needs_a_report(self):
        with self.assertRaises(ReportError):
            emit_plots(self.root / "nothing")
        self.assertEqual(list_reports(self.root / "nothing"), [])

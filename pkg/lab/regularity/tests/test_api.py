import shutil
import tempfile

from django.conf import settings
from django.test import SimpleTestCase, override_settings
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from regularity.harness import FAIL, PASS, Report, verdict
from regularity.reports import PLOT_INDEX, PLOTS_DIR, write_report


def sample_report(status_value=PASS):
    return Report(
        kind="sandwich",
        config={"kind": "sandwich", "seed": 3},
        seed=3,
        series={
            "preservation[holder(0.5)]": [
                {"t": 0.0, "estimate": 1.0, "lower_bound": 1.0, "upper_bound": 1.0, "flag": "converged"},
                {"t": 0.5, "estimate": 1.2, "lower_bound": 0.8, "upper_bound": 1.3, "flag": "converged"},
            ],
            "budget": [{"t": 0.0, "mu_t": 0.0}, {"t": 0.5, "mu_t": 0.5}],
        },
        verdicts={"sandwich[holder(0.5)]": verdict(status_value, "inside")},
    )


class ReportAPITests(SimpleTestCase):
    def setUp(self):
        self.root = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.root, ignore_errors=True)
        self.override = override_settings(HOLDERLAB={**settings.HOLDERLAB, "REPORTS_ROOT": self.root})
        self.override.enable()
        self.addCleanup(self.override.disable)
        self.client = APIClient()

    def test_scenarios_lists_both_catalogs(self):
        response = self.client.get(reverse("scenario-list"))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertIn("linear_strain", response.data["velocity"])
        self.assertIn("bahouri_chemin", response.data["scalar"])

    def test_empty_root_lists_no_reports(self):
        response = self.client.get(reverse("report-list"))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data, [])

    def test_report_list_summarises_each_report(self):
        write_report(sample_report(), f"{self.root}/first")
        write_report(sample_report(FAIL), f"{self.root}/second")
        response = self.client.get(reverse("report-list"))
        self.assertEqual([r["name"] for r in response.data], ["first", "second"])
        self.assertEqual([r["status"] for r in response.data], [PASS, FAIL])
        self.assertEqual(response.data[0]["series"], ["budget", "preservation[holder(0.5)]"])
        self.assertEqual(response.data[0]["verdicts"]["sandwich[holder(0.5)]"]["status"], PASS)

    def test_report_detail_returns_the_persisted_document(self):
        write_report(sample_report(), f"{self.root}/first")
        response = self.client.get(reverse("report-detail", args=["first"]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data["kind"], "sandwich")
        self.assertEqual(response.data["schema_version"], "1.0")
        self.assertEqual(len(response.data["series"]["preservation[holder(0.5)]"]), 2)

    def test_missing_report_is_404(self):
        for name in ("report-detail", "report-plots"):
            response = self.client.get(reverse(name, args=["absent"]))
            self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)

    def test_plots_come_from_the_bundle_index(self):
        write_report(sample_report(), f"{self.root}/first")
        response = self.client.get(reverse("report-plots", args=["first"]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        by_series = {entry["series"]: entry for entry in response.data}
        self.assertEqual(set(by_series), {"budget", "preservation[holder(0.5)]"})
        self.assertEqual(by_series["budget"]["y_scale"], "log")
        self.assertEqual(by_series["preservation[holder(0.5)]"]["file"], "preservation_holder_0.5.csv")

    def test_plots_fall_back_to_the_series_without_an_index(self):
        directory = f"{self.root}/first"
        write_report(sample_report(), directory)
        shutil.rmtree(f"{directory}/{PLOTS_DIR}")
        response = self.client.get(reverse("report-plots", args=["first"]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data), 2)
        self.assertEqual(response.data[0]["x"], "t")
        self.assertNotIn(PLOT_INDEX, [entry["file"] for entry in response.data])

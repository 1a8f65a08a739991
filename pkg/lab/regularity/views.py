import json
from pathlib import Path

from django.conf import settings
from rest_framework.exceptions import NotFound
from rest_framework.response import Response
from rest_framework.views import APIView

from .exceptions import ReportError
from .fields import list_scenarios
from .reports import PLOT_INDEX, PLOTS_DIR, list_reports, load_report, plot_entries
from .serializers import PlotEntrySerializer, ReportSummarySerializer


def _reports_root():
    return Path(settings.HOLDERLAB["REPORTS_ROOT"])


def _load(name):
    try:
        return load_report(_reports_root() / name)
    except ReportError:
        raise NotFound(f"Report '{name}' not found")


class ScenarioListAPIView(APIView):
    def get(self, request):
        return Response(list_scenarios())


class ReportListAPIView(APIView):
    def get(self, request):
        summaries = []
        for name in list_reports(_reports_root()):
            report = _load(name)
            summaries.append(
                {
                    "name": name,
                    "kind": report["kind"],
                    "status": report["status"],
                    "seed": report["seed"],
                    "schema_version": report["schema_version"],
                    "series": sorted(report["series"]),
                    "verdicts": report["verdicts"],
                }
            )
        serializer = ReportSummarySerializer(summaries, many=True)
        return Response(serializer.data)


class ReportDetailAPIView(APIView):
    def get(self, request, name):
        return Response(_load(name))


class ReportPlotsAPIView(APIView):
    def get(self, request, name):
        report = _load(name)
        index = _reports_root() / name / PLOTS_DIR / PLOT_INDEX
        # a bundle that was never emitted is described from the series instead
        entries = plot_entries(report["series"])
        if index.is_file():
            entries = json.loads(index.read_text(encoding="utf-8"))
        serializer = PlotEntrySerializer(entries, many=True)
        return Response(serializer.data)

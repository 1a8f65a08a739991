from django.urls import path
from .views import (
    ReportDetailAPIView,
    ReportListAPIView,
    ReportPlotsAPIView,
    ScenarioListAPIView,
)

urlpatterns = [
    path("scenarios/", ScenarioListAPIView.as_view(), name="scenario-list"),
    path("reports/", ReportListAPIView.as_view(), name="report-list"),
    path("reports/<slug:name>/", ReportDetailAPIView.as_view(), name="report-detail"),
    path("reports/<slug:name>/plots/", ReportPlotsAPIView.as_view(), name="report-plots"),
]

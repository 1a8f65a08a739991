"""
Report persistence.

A report directory holds ``report.json``, one CSV per series under
``series/`` and a plot bundle under ``plots/``: ``index.json`` plus one
CSV per plot whose first column is the x axis.
"""

import json
import logging
import re
from pathlib import Path

import pandas as pd
from rest_framework.utils.encoders import JSONEncoder

from .exceptions import ReportError, ReportWriteError

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
SERIES_DIR = "series"
PLOTS_DIR = "plots"
PLOT_INDEX = "index.json"

# series prefix -> (x column, y columns, x scale, y scale)
PLOT_LAYOUTS = {
    "preservation": ("t", ["estimate", "lower_bound", "upper_bound"], "linear", "linear"),
    "profile": ("r", ["S"], "log", "linear"),
    "budget": ("t", ["mu_t"], "linear", "log"),
    "pairs": ("t", ["min_ratio", "max_ratio", "lower", "upper"], "linear", "log"),
    "log_ratio": ("r", ["min_ratio", "max_ratio", "envelope_low", "envelope_high"], "log", "linear"),
    "growth": ("t", ["holder", "log_holder", "strain", "deformation", "lower_bound"], "linear", "linear"),
    "tracers": ("x1", ["x2"], "linear", "linear"),
}


def file_stem(series_name: str) -> str:
    """``profile[holder(0.5)][t=0.25]`` -> ``profile_holder_0.5_t_0.25``."""
    return re.sub(r"[^A-Za-z0-9.]+", "_", series_name).strip("_")


def dumps(data) -> str:
    return json.dumps(data, cls=JSONEncoder, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def plot_entries(series: dict) -> list:
    entries = []
    for name in sorted(series):
        rows = series[name]
        layout = PLOT_LAYOUTS.get(name.split("[", 1)[0])
        if layout is None or not rows:
            continue
        x, ys, x_scale, y_scale = layout
        columns = set().union(*(row.keys() for row in rows))
        ys = [y for y in ys if y in columns]
        if x not in columns or not ys:
            continue
        entries.append(
            {
                "file": f"{file_stem(name)}.csv",
                "series": name,
                "x": x,
                "y": ys,
                "x_scale": x_scale,
                "y_scale": y_scale,
            }
        )
    return entries


def _frame(rows, columns=None) -> pd.DataFrame:
    frame = pd.DataFrame.from_records(rows)
    if columns is not None:
        frame = frame.reindex(columns=columns)
    return frame


def _write_plots(series: dict, directory: Path, written: list):
    plots = directory / PLOTS_DIR
    plots.mkdir(parents=True, exist_ok=True)
    entries = plot_entries(series)
    for entry in entries:
        path = plots / entry["file"]
        frame = _frame(series[entry["series"]], [entry["x"], *entry["y"]])
        if entry["series"].startswith("tracers"):
            frame.insert(0, "seed_r", [row["seed_r"] for row in series[entry["series"]]])
        frame.to_csv(path, index=False, float_format="%.17g")
        written.append(str(path))
    index = plots / PLOT_INDEX
    index.write_text(dumps(entries), encoding="utf-8")
    written.append(str(index))


def write_report(report, directory) -> list:
    """Write the report files; returns the written paths in write order."""
    directory = Path(directory)
    written = []
    data = report.as_dict()
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / REPORT_FILE
        path.write_text(dumps(data), encoding="utf-8")
        written.append(str(path))
        series_dir = directory / SERIES_DIR
        series_dir.mkdir(exist_ok=True)
        for name in sorted(data["series"]):
            path = series_dir / f"{file_stem(name)}.csv"
            _frame(data["series"][name]).to_csv(path, index=False, float_format="%.17g")
            written.append(str(path))
        _write_plots(data["series"], directory, written)
    except OSError as exc:
        raise ReportWriteError(f"cannot write report to {directory}: {exc.strerror or exc}", written) from exc
    logger.info("wrote %d report files to %s", len(written), directory)
    return written


def load_report(directory) -> dict:
    path = Path(directory) / REPORT_FILE
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ReportError(f"no {REPORT_FILE} in {directory}") from exc
    except (OSError, ValueError) as exc:
        raise ReportError(f"cannot read {path}: {exc}") from exc


def emit_plots(directory) -> list:
    """Regenerate the plot bundle of a persisted report."""
    directory = Path(directory)
    report = load_report(directory)
    written = []
    try:
        _write_plots(report.get("series", {}), directory, written)
    except OSError as exc:
        raise ReportWriteError(f"cannot write plots to {directory}: {exc.strerror or exc}", written) from exc
    return written


def list_reports(root) -> list:
    """Report directories directly under ``root`` that hold a report.json, by name."""
    root = Path(root)
    if not root.is_dir():
        return []
    return sorted(p.name for p in root.iterdir() if (p / REPORT_FILE).is_file())

"""
Experiment campaigns and their verdicts.

Every runner turns an :class:`ExperimentConfig` into a :class:`Report` of
plain-data series and facts. Verdicts are derived from those persisted values
and the configured tolerances only, by the same function that
:func:`recompute_verdicts` applies to a report read back from disk.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from django.conf import settings
from django.utils import timezone

from .config import ExperimentConfig
from .euler2d import (
    SYMMETRY_TOLERANCE,
    EulerState,
    bahouri_chemin_init,
    eigenmode_velocity_error,
    evolve,
    fit_exponential_rate,
    lagrangian_deformation,
    lagrangian_lower_bound,
    log_odd_strain_increment,
    origin_strain_diagnostic,
    origin_strain_integral,
    origin_velocity,
    project_odd_odd,
    random_smooth_state,
    vorticity_coefficient_at_origin,
    zero_state,
)
from .exceptions import CFLViolation, ConfigError
from .fields import scalar_catalog, spectral_ops
from .flow import bilipschitz_check, lipschitz_budget, log_ratio_check, random_pairs
from .modcont import ModulusFamily
from .transport import TransportProblem, preservation_curve, relative_gap

logger = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"
INDETERMINATE = "INDETERMINATE"
CONVERGED = "converged"
FLAT_TOLERANCE = 1e-12
EIGENMODE_TOLERANCE = 1e-12


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return _finite(value.item())
    return value


def clean_rows(rows) -> list:
    """Rows as JSON-safe dicts; non-finite numbers become None."""
    return [{key: _finite(value) for key, value in row.items()} for row in rows]


def verdict(status: str, detail: str = "") -> dict:
    return {"status": status, "detail": detail}


def overall_status(verdicts: dict) -> str:
    statuses = {v["status"] for v in verdicts.values()}
    if FAIL in statuses:
        return FAIL
    if INDETERMINATE in statuses:
        return INDETERMINATE
    return PASS


@dataclass
class Report:
    kind: str
    config: dict
    seed: int
    series: dict = field(default_factory=dict)
    facts: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    name: Optional[str] = None

    @property
    def status(self) -> str:
        return overall_status(self.verdicts)

    def as_dict(self) -> dict:
        return {
            "schema_version": settings.HOLDERLAB["SCHEMA_VERSION"],
            "version": settings.HOLDERLAB["VERSION"],
            "kind": self.kind,
            "seed": self.seed,
            "config": self.config,
            "facts": self.facts,
            "series": self.series,
            "verdicts": self.verdicts,
            "status": self.status,
            "timing": self.timing,
        }


# Verdicts


def _tolerances(config: dict) -> dict:
    return ExperimentConfig(config["kind"], config).tolerances


def _not_converged(rows) -> Optional[str]:
    for row in rows:
        if row.get("flag") != CONVERGED:
            return f"estimate at t={row['t']:g} is {row.get('flag')}"
    return None


def _transport_verdicts(kind: str, config: dict, series: dict, facts: dict) -> dict:
    tol = _tolerances(config)
    out = {}
    for label, coeff in facts.get("coefficients", {}).items():
        rows = series[f"preservation[{label}]"]
        problem = _not_converged(rows)
        if kind == "preservation":
            if problem:
                out[f"gap[{label}]"] = verdict(INDETERMINATE, problem)
            else:
                worst = max(row["gap"] for row in rows)
                status = PASS if worst <= tol["gap"] else FAIL
                out[f"gap[{label}]"] = verdict(status, f"max gap {worst:.4g} vs tolerance {tol['gap']:g}")
        else:
            out[f"sandwich[{label}]"] = _sandwich_verdict(rows, tol["slack"], problem)
            if tol.get("saturation") is not None and not problem:
                last = rows[-1]
                miss = abs(last["estimate"] - last["upper_bound"]) / max(last["upper_bound"], np.finfo(float).eps)
                status = PASS if miss <= tol["saturation"] else FAIL
                out[f"saturation[{label}]"] = verdict(
                    status, f"estimate/upper bound at t={last['t']:g} off by {miss:.4g}"
                )
        if coeff.get("known") is not None:
            known = coeff["known"]
            error = abs(coeff["initial"] - known) / max(abs(known), np.finfo(float).eps)
            status = PASS if error <= tol["initial"] else FAIL
            out[f"initial[{label}]"] = verdict(status, f"initial {coeff['initial']:.6g} vs exact {known:g}")
        ratio_rows = series.get(f"log_ratio[{label}]")
        if ratio_rows:
            outside = [row["r"] for row in ratio_rows if not row["inside"]]
            out[f"log_ratio[{label}]"] = verdict(
                FAIL if outside else PASS,
                f"outside the envelope at r={outside}" if outside else "all radii inside the envelope",
            )
    if kind == "sandwich" and len(facts.get("coefficients", {})) > 1:
        out["width_monotone"] = _width_verdict(series, facts)
    if "pairs" in facts:
        out["bilipschitz"] = _pairs_verdict(facts["pairs"])
    return out


def _sandwich_verdict(rows, slack: float, problem: Optional[str]) -> dict:
    if problem:
        return verdict(INDETERMINATE, problem)
    outside = [
        row["t"]
        for row in rows
        if not row["lower_bound"] * (1.0 - slack) <= row["estimate"] <= row["upper_bound"] * (1.0 + slack)
    ]
    if outside:
        return verdict(FAIL, f"estimates outside the sandwich at t={outside}")
    return verdict(PASS, f"all {len(rows)} records inside the sandwich (slack {slack:g})")


def _width_verdict(series: dict, facts: dict) -> dict:
    widths = []
    for label, coeff in facts["coefficients"].items():
        last = series[f"preservation[{label}]"][-1]
        if last["upper_bound"] is None or last["lower_bound"] is None:
            return verdict(INDETERMINATE, f"no bounds for {label}")
        initial = max(coeff["initial"], np.finfo(float).eps)
        widths.append((coeff["exponent"], (last["upper_bound"] - last["lower_bound"]) / initial))
    widths.sort()
    shrinking = all(b[1] >= a[1] * (1.0 - 1e-12) for a, b in zip(widths, widths[1:]))
    detail = ", ".join(f"β={b:g}: {w:.4g}" for b, w in widths)
    return verdict(PASS if shrinking else FAIL, f"relative sandwich width {detail}")


def _pairs_verdict(pairs: dict) -> dict:
    count = pairs["violations"]
    return verdict(
        PASS if count == 0 else FAIL,
        f"{count} violation(s) among {pairs['count']} pairs (slack {pairs['slack']:g})",
    )


def _strictly_decreasing_or_flat(values) -> bool:
    if max(values, default=0.0) <= FLAT_TOLERANCE:
        return True
    return all(b < a for a, b in zip(values, values[1:]))


def _flow_verdicts(config: dict, series: dict, facts: dict) -> dict:
    tol = _tolerances(config)
    out = {}
    if "pairs" in facts:
        out["bilipschitz"] = _pairs_verdict(facts["pairs"])
    if "mu_t_refined" in facts:
        diff = abs(facts["mu_t"] - facts["mu_t_refined"])
        out["refinement"] = verdict(
            PASS if diff <= tol["refinement"] else FAIL,
            f"|mu(T) - mu_refined(T)| = {diff:.3g} vs tolerance {tol['refinement']:g}",
        )
    rows = series.get("log_ratio")
    if rows:
        outside = [row["r"] for row in rows if not row["inside"]]
        decreasing = _strictly_decreasing_or_flat([row["worst"] for row in rows])
        status = PASS if not outside and decreasing else FAIL
        detail = "worst |ratio - 1| strictly decreasing and inside the envelope"
        if outside:
            detail = f"outside the envelope at r={outside}"
        elif not decreasing:
            detail = "worst |ratio - 1| is not strictly decreasing as r shrinks"
        out["log_ratio"] = verdict(status, detail)
    return out


def _euler_verdicts(config: dict, series: dict, facts: dict) -> dict:
    tol = _tolerances(config)
    out = {}
    if facts.get("aborted"):
        out["cfl"] = verdict(INDETERMINATE, facts["aborted"])
    rows = series.get("growth", [])
    if not rows:
        return out
    holder = [row["holder"] for row in rows]
    noise = facts["noise_floor"]
    if facts.get("initial_expected") is not None:
        expected = facts["initial_expected"]
        error = abs(holder[0] - expected) / expected
        out["initial"] = verdict(
            PASS if error <= tol["initial"] else FAIL,
            f"initial coefficient {holder[0]:.6g} vs derived {expected:g}",
        )
    defects = [row["symmetry_defect"] for row in rows if row.get("symmetry_defect") is not None]
    if defects:
        out["symmetry"] = _symmetry_verdict(defects)
    if facts.get("aborted"):
        return out
    tracks = series.get("tracers", [])
    if config["expect"] == "growth":
        increments = [b - a for a, b in zip(holder, holder[1:])]
        rate = fit_exponential_rate([row["t"] for row in rows], holder)
        growing = bool(increments) and all(d > noise for d in increments) and rate > 0
        out["GROWTH"] = verdict(
            PASS if growing else FAIL,
            f"smallest increment {min(increments, default=math.nan):.4g} vs noise {noise:.3g}; fitted rate {rate:.4g}",
        )
        gaps = [row["log_gap"] for row in rows if row.get("log_gap") is not None]
        if gaps:
            worst = max(gaps)
            out["PRESERVED"] = verdict(
                PASS if worst <= tol["log_gap"] else FAIL,
                f"max log-Hölder gap {worst:.4g} vs tolerance {tol['log_gap']:g}",
            )
        if tracks:
            out["tracers"] = _tracer_verdict(tracks)
    else:
        flat = all(abs(v) <= noise + FLAT_TOLERANCE for v in holder) and all(
            abs(row["strain"]) <= FLAT_TOLERANCE for row in rows
        )
        out["FLAT"] = verdict(PASS if flat else FAIL, f"max coefficient {max(holder):.3g}")
        if tracks:
            moved = max(
                math.hypot(row["x1"] - row["seed_x1"], row["x2"] - row["seed_x2"]) for row in tracks
            )
            out["tracers"] = verdict(
                PASS if moved <= FLAT_TOLERANCE else FAIL, f"largest tracer displacement {moved:.3g}"
            )
    return out


def _tracer_verdict(tracks) -> dict:
    by_seed = {}
    for row in tracks:
        by_seed.setdefault(row["seed_r"], []).append(row)
    problems = []
    for r, rows in sorted(by_seed.items()):
        rows = sorted(rows, key=lambda row: row["t"])
        pairs = list(zip(rows, rows[1:]))
        if not all(b["x1"] > a["x1"] for a, b in pairs):
            problems.append(f"r={r:g}: x1 not increasing")
        if not all(b["x2"] < a["x2"] for a, b in pairs):
            problems.append(f"r={r:g}: x2 not decreasing")
        if not all(b["radius"] < a["radius"] for a, b in pairs):
            problems.append(f"r={r:g}: |phi| not decreasing")
    return verdict(FAIL if problems else PASS, "; ".join(problems) or "x1 up, x2 down, |phi| down for every seed")


def _symmetry_verdict(defects) -> dict:
    worst = max(defects)
    return verdict(
        PASS if worst <= SYMMETRY_TOLERANCE else FAIL,
        f"largest odd-odd defect removed by the projection {worst:.3g} vs {SYMMETRY_TOLERANCE:g}",
    )


def _validation_verdicts(config: dict, series: dict, facts: dict) -> dict:
    tol = _tolerances(config)
    out = {}
    if facts.get("aborted"):
        out["cfl"] = verdict(INDETERMINATE, facts["aborted"])
    if "eigenmode_error" in facts:
        error = facts["eigenmode_error"]
        out["biot_savart"] = verdict(
            PASS if error <= EIGENMODE_TOLERANCE else FAIL,
            f"eigenmode velocity error {error:.3g} vs {EIGENMODE_TOLERANCE:g}",
        )
    rows = series.get("conservation", [])
    if rows:
        drift = max(max(row["l2_drift"], row["l4_drift"]) for row in rows)
        out["conservation"] = verdict(
            PASS if drift <= tol["conservation"] else FAIL,
            f"largest L2/L4 drift {drift:.3g} vs tolerance {tol['conservation']:g}",
        )
        out["symmetry"] = _symmetry_verdict([row["symmetry_defect"] for row in rows])
        origin = max(max(abs(row["origin_omega"]), row["origin_speed"]) for row in rows)
        out["fixed_point"] = verdict(
            PASS if origin <= SYMMETRY_TOLERANCE else FAIL,
            f"largest |omega| or |u| at the origin {origin:.3g} vs {SYMMETRY_TOLERANCE:g}",
        )
    strain = series.get("strain", [])
    if strain:
        values = [row["strain"] for row in strain]
        increasing = all(b > a for a, b in zip(values, values[1:]))
        out["strain_increasing"] = verdict(
            PASS if increasing else FAIL,
            "strain grows as the cutoff shrinks" if increasing else f"strain values {values} are not increasing",
        )
        errors = [row["relative_error"] for row in strain if row.get("relative_error") is not None]
        if errors:
            worst = max(errors)
            out["strain_oracle"] = verdict(
                PASS if worst <= tol["strain"] else FAIL,
                f"largest relative error against the radial antiderivative {worst:.3g} vs {tol['strain']:g}",
            )
    return out


def derive_verdicts(kind: str, config: dict, series: dict, facts: dict) -> dict:
    if kind in ("preservation", "sandwich"):
        return _transport_verdicts(kind, config, series, facts)
    if kind == "flow_diagnostics":
        return _flow_verdicts(config, series, facts)
    if kind == "euler_growth":
        return _euler_verdicts(config, series, facts)
    if kind == "euler_validation":
        return _validation_verdicts(config, series, facts)
    raise ConfigError(f"unknown experiment kind '{kind}'", key="kind")


def recompute_verdicts(report: dict) -> dict:
    """Verdicts of a persisted report.json, from its records and tolerances alone."""
    return derive_verdicts(report["kind"], report["config"], report["series"], report["facts"])


# Runners


def _require(c: ExperimentConfig, kind: str):
    if c.kind != kind:
        raise ConfigError(f"expected a '{kind}' config, got '{c.kind}'", key="kind")


def _budget_rows(budget) -> list:
    rows = []
    for k, t in enumerate(budget.times):
        row = {"t": float(t), "integral": float(budget.integral[k]), "mu_t": float(budget.mu[k])}
        if budget.local_integral is not None:
            row["local_integral"] = float(budget.local_integral[k])
        rows.append(row)
    return rows


def _pair_check(c: ExperimentConfig, u, tg, budget, jobs: int):
    section = dict(c.settings.get("pairs") or {"count": 100, "max_separation": 0.5})
    rng = np.random.default_rng(c.seed)
    half_period = u.grid.half_period if u.grid is not None else math.pi
    alphas, betas = random_pairs(rng, section["count"], half_period, section["max_separation"])
    report = bilipschitz_check(u, (alphas, betas), tg, c.tolerances["slack"], budget, half_period, jobs)
    violations = report.violations
    facts = {
        "count": int(section["count"]),
        "slack": float(c.tolerances["slack"]),
        "violations": len(violations),
        "first_violations": violations[:10],
    }
    return clean_rows(report.summary_rows()), facts


def _log_ratio_rows(u, x0, radii, t, gamma, tg, directions, budget, key: str) -> list:
    log_mu = math.log(budget.mu_at(t, tg))
    too_large = [float(r) for r in radii if not math.log(1.0 / r) > log_mu]
    if too_large:
        raise ConfigError(
            f"log-ratio radii {too_large} have log(1/r) <= log mu(t) = {log_mu:.4g}; the envelope is undefined there",
            key=key,
        )
    rows = log_ratio_check(u, x0, radii, t, gamma, tg, directions, budget)
    return [
        {
            "r": row.r,
            "min_ratio": row.min_ratio,
            "max_ratio": row.max_ratio,
            "worst": row.worst,
            "envelope_low": row.envelope_low,
            "envelope_high": row.envelope_high,
            "inside": row.inside,
        }
        for row in rows
    ]


def _transport_campaign(c: ExperimentConfig, jobs: int) -> Report:
    tg = c.time_grid()
    u = c.velocity()
    radii = c.radii()
    sampler = c.sampler()
    tol = c.tolerances
    report = Report(c.kind, c.as_dict(), c.seed)
    report.facts["coefficients"] = {}
    budget = None
    for family in c.families():
        theta0 = c.data_field(family)
        logger.info("%s: %s on '%s' under %s", c.kind, family.label, theta0.name, u.kind)
        problem = TransportProblem(
            u, theta0, c.center, family, tg, radii, sampler, tol["plateau"], c.output_times(), jobs=jobs
        )
        curve = preservation_curve(problem)
        budget = curve.budget
        initial = curve.initial
        label = family.label
        bounds = initial.value if family.kind == "holder" else None
        first = {
            "t": 0.0,
            "x1": problem.x0[0],
            "x2": problem.x0[1],
            "estimate": initial.value,
            "gap": 0.0,
            "mu_t": 1.0,
            "lower_bound": bounds,
            "upper_bound": bounds,
            "flag": initial.flag,
        }
        report.series[f"preservation[{label}]"] = clean_rows([first] + [r.as_row() for r in curve.records])
        report.series[f"profile[{label}][t=0]"] = clean_rows(curve.initial_profile)
        for record in curve.records:
            report.series[f"profile[{label}][t={record.t:g}]"] = clean_rows(record.profile)
        known = theta0.known
        matches = (
            known is not None
            and known.family == family.kind
            and math.isclose(known.exponent, family.exponent)
            and tuple(known.center) == problem.x0
        )
        report.facts["coefficients"][label] = {
            "family": family.kind,
            "exponent": family.exponent,
            "initial": _finite(initial.value),
            "initial_flag": initial.flag,
            "known": known.value if matches else None,
        }
        if c.kind == "preservation" and family.kind == "log_holder":
            report.series[f"log_ratio[{label}]"] = clean_rows(
                _log_ratio_rows(u, problem.x0, radii, tg.t_end, family.exponent, tg, 64, budget, "radii")
            )
    if budget is not None:
        report.series["budget"] = _budget_rows(budget)
    if c.kind == "preservation":
        report.series["pairs"], report.facts["pairs"] = _pair_check(c, u, tg, budget, jobs)
    return report


def run_preservation_experiment(c: ExperimentConfig, jobs: Optional[int] = None) -> Report:
    _require(c, "preservation")
    return _finish(c, _transport_campaign, jobs)


def run_sandwich_experiment(c: ExperimentConfig, jobs: Optional[int] = None) -> Report:
    _require(c, "sandwich")
    return _finish(c, _transport_campaign, jobs)


def _flow_campaign(c: ExperimentConfig, jobs: int) -> Report:
    tg = c.time_grid()
    u = c.velocity()
    report = Report(c.kind, c.as_dict(), c.seed)
    budget = lipschitz_budget(u, tg)
    refined = lipschitz_budget(u, tg.refined(10))
    report.facts["mu_t"] = float(budget.mu[-1])
    report.facts["mu_t_refined"] = float(refined.mu[-1])
    report.series["budget"] = _budget_rows(budget)
    if "pairs" in c.settings:
        report.series["pairs"], report.facts["pairs"] = _pair_check(c, u, tg, budget, jobs)
    if "log_ratio" in c.settings:
        section = c.settings["log_ratio"]
        report.series["log_ratio"] = clean_rows(
            _log_ratio_rows(
                u, c.center, c.log_ratio_radii(), section["t"], section["gamma"], tg, section["directions"], budget,
                "log_ratio.k_min",
            )
        )
    return report


def run_flow_diagnostics_experiment(c: ExperimentConfig, jobs: Optional[int] = None) -> Report:
    _require(c, "flow_diagnostics")
    return _finish(c, _flow_campaign, jobs)


def _euler_campaign(c: ExperimentConfig, jobs: int) -> Report:
    grid = c.grid()
    holder = c.families()[0]
    beta = holder.exponent
    gamma = c.settings.get("log_gamma")
    log_family = ModulusFamily("log_holder", gamma) if gamma is not None else None
    radii = c.radii(grid.spacing)
    tol = c.tolerances
    tg = c.time_grid()
    scenario = c.settings["data"]["name"]
    state = bahouri_chemin_init(beta, grid) if scenario == "bahouri_chemin" else zero_state(grid)
    seeds = np.array([(r, 2.0 * r) for r in c.settings.get("seeds", [])], dtype=float).reshape(-1, 2)
    if scenario == "bahouri_chemin":
        seed_values = scalar_catalog("bahouri_chemin", {"exponent": beta}).evaluate(seeds)
    else:
        seed_values = np.zeros(len(seeds))
    cutoff = c.settings["strain_cutoff_cells"] * grid.spacing

    report = Report(c.kind, c.as_dict(), c.seed)
    report.facts["strain_constant"] = "4/pi"
    report.facts["strain_cutoff"] = cutoff
    report.facts["radii"] = [float(r) for r in radii]
    report.facts["initial_expected"] = 0.5 if scenario == "bahouri_chemin" else None

    ops = spectral_ops(grid)
    repeat = EulerState(grid, project_odd_odd(ops.inverse(ops.forward(state.omega))), 0.0, state.symmetry)
    base = vorticity_coefficient_at_origin(state, holder, radii, plateau_tol=tol["plateau"])
    again = vorticity_coefficient_at_origin(repeat, holder, radii, plateau_tol=tol["plateau"])
    report.facts["noise_floor"] = abs(again.value - base.value) + FLAT_TOLERANCE * max(1.0, base.value)

    rows, tracks = [], []
    log_initial = None
    tracers = seeds.copy() if len(seeds) else None

    def record(s: EulerState, points):
        nonlocal log_initial
        est = vorticity_coefficient_at_origin(s, holder, radii, plateau_tol=tol["plateau"])
        row = {"t": s.t, "holder": est.value, "holder_flag": est.flag}
        if log_family is not None:
            log_est = vorticity_coefficient_at_origin(s, log_family, radii, plateau_tol=tol["plateau"])
            if log_initial is None:
                log_initial = log_est.value
            row.update(log_holder=log_est.value, log_flag=log_est.flag, log_gap=relative_gap(log_est.value, log_initial))
        row["strain"] = origin_strain_diagnostic(s, cutoff)
        row["symmetry_defect"] = s.symmetry_defect
        if points is not None:
            radius = np.hypot(points[:, 0], points[:, 1])
            bound = lagrangian_lower_bound(seed_values, points, beta)
            inside = radius <= radii[0]
            row["lower_bound"] = float(bound[inside].max()) if inside.any() else None
            for (sx, sy), p, rr in zip(seeds, points, radius):
                tracks.append(
                    {"t": s.t, "seed_r": sx, "seed_x1": sx, "seed_x2": sy, "x1": p[0], "x2": p[1], "radius": rr}
                )
        rows.append(row)
        logger.info("euler t=%g: [omega]_holder %.6g, strain %.4g", s.t, est.value, row["strain"])

    record(state, tracers)
    previous = 0
    try:
        for t in c.output_times():
            k = tg.index(t)
            state, tracers = evolve(state, tg.dt, k - previous, tracers)
            # accumulated k * dt drifts from the node value
            state = replace(state, t=float(tg.nodes[k]))
            previous = k
            record(state, tracers)
    except CFLViolation as exc:
        logger.warning("euler run aborted: %s", exc)
        report.facts["aborted"] = f"{exc}; increase n only together with a smaller dt"

    deformation = lagrangian_deformation([row["t"] for row in rows], [row["strain"] for row in rows])
    for row, value in zip(rows, deformation):
        row["deformation"] = float(value)
    report.series["growth"] = clean_rows(rows)
    if tracks:
        report.series["tracers"] = clean_rows(tracks)
    return report


def run_euler_growth_experiment(c: ExperimentConfig, jobs: Optional[int] = None) -> Report:
    _require(c, "euler_growth")
    return _finish(c, _euler_campaign, jobs)


def _conservation_rows(c: ExperimentConfig, report: Report) -> list:
    grid = c.grid()
    tg = c.time_grid()
    modes = {"k_max": 4, "amplitude": 1.0, **c.settings.get("modes", {})}
    state = random_smooth_state(grid, c.seed, modes["k_max"], modes["amplitude"])
    l2, l4 = state.norm(2), state.norm(4)
    center_node = grid.n // 2
    rows = []

    def record(s: EulerState):
        rows.append(
            {
                "t": s.t,
                "l2": s.norm(2),
                "l4": s.norm(4),
                "l2_drift": relative_gap(s.norm(2), l2),
                "l4_drift": relative_gap(s.norm(4), l4),
                "symmetry_defect": s.symmetry_defect,
                "origin_omega": float(s.omega[center_node, center_node]),
                "origin_speed": origin_velocity(s),
            }
        )

    record(state)
    previous = 0
    try:
        for t in c.output_times():
            k = tg.index(t)
            state, _ = evolve(state, tg.dt, k - previous)
            state = replace(state, t=float(tg.nodes[k]))
            previous = k
            record(state)
            logger.info("validation t=%g: L2 drift %.3g, L4 drift %.3g", state.t, rows[-1]["l2_drift"], rows[-1]["l4_drift"])
    except CFLViolation as exc:
        logger.warning("validation run aborted: %s", exc)
        report.facts["aborted"] = str(exc)
    return rows


def _strain_rows(c: ExperimentConfig, report: Report) -> list:
    section = c.settings["strain"]
    data = c.settings["data"]
    f = c.data_field()
    outer = section["outer"]
    oracle = data["name"] == "log_odd"
    gamma = f.params["exponent"] if oracle else None
    report.facts["strain_constant"] = "4/pi"
    report.facts["strain_outer"] = outer
    rows, previous = [], None
    for cutoff in section["cutoffs"]:
        value = origin_strain_integral(f, cutoff, outer)
        row = {"cutoff": cutoff, "strain": value, "increment": None, "oracle_increment": None, "relative_error": None}
        if previous is not None:
            row["increment"] = value - previous[1]
            if oracle:
                expected = log_odd_strain_increment(gamma, cutoff, previous[0])
                row["oracle_increment"] = expected
                row["relative_error"] = relative_gap(row["increment"], expected)
        rows.append(row)
        previous = (cutoff, value)
        logger.info("origin strain with cutoff %g: %.6g", cutoff, value)
    return rows


def _validation_campaign(c: ExperimentConfig, jobs: int) -> Report:
    report = Report(c.kind, c.as_dict(), c.seed)
    if "grid" in c.settings:
        report.facts["eigenmode_error"] = eigenmode_velocity_error(c.grid())
        report.series["conservation"] = clean_rows(_conservation_rows(c, report))
    if "strain" in c.settings:
        report.series["strain"] = clean_rows(_strain_rows(c, report))
    return report


def run_euler_validation_experiment(c: ExperimentConfig, jobs: Optional[int] = None) -> Report:
    _require(c, "euler_validation")
    return _finish(c, _validation_campaign, jobs)


def _finish(c: ExperimentConfig, campaign, jobs: Optional[int]) -> Report:
    jobs = jobs or c.jobs
    started = timezone.now()
    clock = time.perf_counter()
    report = campaign(c, jobs)
    report.verdicts = derive_verdicts(report.kind, report.config, report.series, report.facts)
    report.timing = {
        "started": started.isoformat(),
        "finished": timezone.now().isoformat(),
        "seconds": round(time.perf_counter() - clock, 3),
    }
    logger.info("%s finished: %s", c.kind, report.status)
    for name, v in report.verdicts.items():
        level = logging.INFO if v["status"] == PASS else logging.WARNING
        logger.log(level, "  %s: %s (%s)", name, v["status"], v["detail"])
    return report


RUNNERS = {
    "preservation": run_preservation_experiment,
    "sandwich": run_sandwich_experiment,
    "euler_growth": run_euler_growth_experiment,
    "euler_validation": run_euler_validation_experiment,
    "flow_diagnostics": run_flow_diagnostics_experiment,
}


def run_experiment(c: ExperimentConfig, jobs: Optional[int] = None) -> Report:
    return RUNNERS[c.kind](c, jobs)


def run_experiments(configs: Sequence[ExperimentConfig], jobs: Optional[int] = None) -> list:
    """Independent experiments side by side; reports come back in config order."""
    if len(configs) <= 1:
        return [run_experiment(c, jobs) for c in configs]
    with ThreadPoolExecutor(max_workers=min(len(configs), jobs or len(configs))) as executor:
        return list(executor.map(lambda c: run_experiment(c, 1), configs))

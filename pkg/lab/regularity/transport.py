"""
Transport equation theta_t + u . grad(theta) = 0 by exact Lagrangian pullback.

theta(x, t) = theta0(alpha) where phi(alpha, t) = x; no grid is involved, so
coefficients measured on the pulled-back field see exact transport up to the
integrator error. :func:`advect_spectral` is an independent Eulerian solver
kept as an oracle for the pullback.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import EstimatorError, FieldError, LabError
from .fields import GriddedScalar, Grid2, spectral_ops
from .flow import TimeGrid, integrate_points, integrate_trajectory, inverse_points, lipschitz_budget
from .modcont import (
    CoefficientEstimate,
    S_MAX,
    DirectionSweep,
    ModulusFamily,
    coefficient_profile,
    estimate_coefficient,
    sandwich_bounds,
    sup_coefficient,
)

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
BOUNDEDNESS_SAMPLES = 64


@dataclass(frozen=True, eq=False)
class TransportProblem:
    u: object
    theta0: object
    x0: tuple
    modulus: ModulusFamily
    tg: TimeGrid
    radii: Sequence[float]
    sampler: object = DirectionSweep()
    plateau_tol: float = 0.01
    output_times: Sequence[float] = ()
    half_period: float = math.pi
    jobs: int = 1

    def __post_init__(self):
        L = self.half_period
        x0 = tuple(float(c) for c in self.x0)
        if not all(-L <= c < L for c in x0):
            raise FieldError(f"tracked point {x0} outside the box [-{L:g}, {L:g})^2")
        object.__setattr__(self, "x0", x0)
        axis = np.linspace(-L, L, BOUNDEDNESS_SAMPLES, endpoint=False)
        samples = self.theta0.evaluate(np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1))
        if not np.all(np.isfinite(samples)):
            raise FieldError(f"initial data '{self.theta0.name}' is not bounded on the box")
        times = tuple(float(t) for t in (self.output_times or (self.tg.t_end,)))
        for t in times:
            self.tg.index(t)
        object.__setattr__(self, "output_times", times)


class PulledBackScalar:
    """x -> theta0(phi^-1(x, t)), evaluated one backward batch per call."""

    def __init__(self, p: TransportProblem, t: float):
        self.problem = p
        self.t = t
        self.name = f"{p.theta0.name}@t={t:g}"
        self.grid = getattr(p.theta0, "grid", None)

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        p = self.problem
        if self.t == 0.0:
            return p.theta0.evaluate(points)
        alphas = inverse_points(p.u, points.reshape(-1, 2), self.t, p.tg, p.jobs)
        return p.theta0.evaluate(alphas).reshape(shape)


def solve_theta(p: TransportProblem, x, t: float) -> float:
    p.tg.index(t)
    return float(PulledBackScalar(p, t).evaluate(np.asarray(x, dtype=float)[None, :])[0])


@dataclass(frozen=True)
class PreservationRecord:
    t: float
    position: tuple
    estimate: CoefficientEstimate
    initial: float
    gap: float
    mu_t: float
    local_budget: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    profile: tuple = ()

    def as_row(self) -> dict:
        return {
            "t": self.t,
            "x1": self.position[0],
            "x2": self.position[1],
            "estimate": self.estimate.value,
            "gap": self.gap,
            "mu_t": self.mu_t,
            "lower_bound": self.lower,
            "upper_bound": self.upper,
            "flag": self.estimate.flag,
        }


def relative_gap(value: float, initial: float) -> float:
    return abs(value - initial) / max(initial, EPS)


def initial_profile(p: TransportProblem):
    return coefficient_profile(p.theta0, p.x0, p.modulus, p.radii, p.sampler, p.jobs)


def initial_coefficient(p: TransportProblem) -> CoefficientEstimate:
    return estimate_coefficient(initial_profile(p), p.plateau_tol)


def transported_coefficient(
    p: TransportProblem, t: float, initial: Optional[CoefficientEstimate] = None,
    budget=None,
) -> PreservationRecord:
    budget = budget or lipschitz_budget(p.u, p.tg, integrate_trajectory(p.u, p.x0, p.tg))
    mu_t = budget.mu_at(t, p.tg)
    if mu_t * p.radii[0] > S_MAX:
        raise EstimatorError(
            f"mu(t) * r0 = {mu_t:.4g} * {p.radii[0]:g} exceeds s_max = {S_MAX} at t={t:g}; "
            "the pulled-back balls leave the modulus range"
        )
    initial = initial or initial_coefficient(p)
    center = integrate_points(p.u, np.asarray(p.x0)[None, :], p.tg, stop=t)[0]
    # theta(phi(x0, t), t) = theta0(x0) exactly
    f_center = float(p.theta0.evaluate(np.asarray(p.x0)[None, :])[0])
    profile = coefficient_profile(
        PulledBackScalar(p, t), center, p.modulus, p.radii, p.sampler, p.jobs, f_center=f_center
    )
    estimate = estimate_coefficient(profile, p.plateau_tol)
    local = budget.local_at(t, p.tg)
    lower = upper = None
    if p.modulus.kind == "holder":
        lower, upper = sandwich_bounds(initial.value, p.modulus.exponent, local)
    record = PreservationRecord(
        t=float(t),
        position=(float(center[0]), float(center[1])),
        estimate=estimate,
        initial=initial.value,
        gap=relative_gap(estimate.value, initial.value),
        mu_t=mu_t,
        local_budget=local,
        lower=lower,
        upper=upper,
        profile=tuple(profile.rows()),
    )
    logger.info(
        "t=%g %s estimate %.6g (initial %.6g, gap %.3g, %s)",
        t, p.modulus.label, estimate.value, initial.value, record.gap, estimate.flag,
    )
    return record


@dataclass
class PreservationCurve:
    initial: CoefficientEstimate
    records: list = field(default_factory=list)
    budget: object = None
    trajectory: object = None
    initial_profile: tuple = ()

    @property
    def max_gap(self) -> float:
        return max((r.gap for r in self.records), default=0.0)

    @property
    def converged(self) -> bool:
        return self.initial.converged and all(r.estimate.converged for r in self.records)


def preservation_curve(p: TransportProblem) -> PreservationCurve:
    """Records at every output time; Hölder families also carry sandwich bounds."""
    profile = initial_profile(p)
    initial = estimate_coefficient(profile, p.plateau_tol)
    trajectory = integrate_trajectory(p.u, p.x0, p.tg)
    budget = lipschitz_budget(p.u, p.tg, trajectory)
    curve = PreservationCurve(initial, budget=budget, trajectory=trajectory, initial_profile=tuple(profile.rows()))
    for t in p.output_times:
        try:
            curve.records.append(transported_coefficient(p, t, initial, budget))
        except LabError as exc:
            # an estimator failure at one time is recorded, not fatal
            logger.warning("t=%g: coefficient estimate failed: %s", t, exc)
            failed = CoefficientEstimate(math.nan, (math.nan, math.nan), "failed", math.nan, False, p.modulus.label)
            curve.records.append(
                PreservationRecord(
                    t=float(t),
                    position=tuple(float(c) for c in trajectory.at(t, p.tg)),
                    estimate=failed,
                    initial=initial.value,
                    gap=math.inf,
                    mu_t=budget.mu_at(t, p.tg),
                    local_budget=budget.local_at(t, p.tg),
                )
            )
    return curve


@dataclass(frozen=True)
class SupPreservation:
    initial_center: tuple
    initial: CoefficientEstimate
    transported_center: tuple
    transported: CoefficientEstimate

    @property
    def gap(self) -> float:
        return relative_gap(self.transported.value, self.initial.value)


def sup_preservation(p: TransportProblem, centers, t: float) -> SupPreservation:
    """Supremum of the pointwise coefficient over ``centers`` at 0 and over their images at t."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    before = sup_coefficient(p.theta0, centers, p.modulus, p.radii, p.sampler, p.plateau_tol, p.jobs)
    moved = integrate_points(p.u, centers, p.tg, stop=t)
    after = sup_coefficient(
        PulledBackScalar(p, t), moved, p.modulus, p.radii, p.sampler, p.plateau_tol, p.jobs
    )
    return SupPreservation(before.center, before.estimate, after.center, after.estimate)


def advect_spectral(theta0: GriddedScalar, u, tg: TimeGrid, t: Optional[float] = None) -> GriddedScalar:
    """Eulerian pseudo-spectral transport: RK4 in time, 2/3-dealiased advection product."""
    grid: Grid2 = theta0.grid
    ops = spectral_ops(grid)
    nodes = grid.nodes()
    last = tg.steps if t is None else tg.index(t)

    def rhs(coeffs, s):
        vel = u.velocity(nodes, s)
        d1 = ops.inverse(ops.ik1 * coeffs)
        d2 = ops.inverse(ops.ik2 * coeffs)
        return -ops.dealias * ops.forward(vel[..., 0] * d1 + vel[..., 1] * d2)

    coeffs = ops.forward(theta0.values)
    h = tg.dt
    times = tg.nodes
    for k in range(last):
        s = times[k]
        k1 = rhs(coeffs, s)
        k2 = rhs(coeffs + 0.5 * h * k1, s + 0.5 * h)
        k3 = rhs(coeffs + 0.5 * h * k2, s + 0.5 * h)
        k4 = rhs(coeffs + h * k3, s + h)
        coeffs = coeffs + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    values = ops.inverse(coeffs)
    if not np.all(np.isfinite(values)):
        raise FieldError("spectral advection produced non-finite values")
    return GriddedScalar(grid, values, order="spectral", name=f"{theta0.name}:advected")

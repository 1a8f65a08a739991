"""
Particle trajectories of a velocity field and flow-map diagnostics.

Trajectories solve dphi/dt = u(phi, t), phi(x0, 0) = x0 with the classical
fourth-order Runge-Kutta scheme on a uniform :class:`TimeGrid`. Point clouds
are integrated as one batch; seeds never interact, so chunks may be handed to
worker threads.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import FlowError
from .fields import largest_singular_value, map_point_chunks
from .modcont import S_MAX

logger = logging.getLogger(__name__)

NODE_TOLERANCE = 1e-9
# tolerance on the envelope comparison, relative to the envelope bounds
ENVELOPE_RTOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes 0 = t_0 < ... < t_K = t_end.

    ``dt`` is shrunk to ``t_end / K`` when the requested step does not divide
    ``t_end``.
    """

    t_end: float
    dt: float

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise FlowError(f"t_end must be positive, got {self.t_end}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise FlowError(f"dt must be positive, got {self.dt}")
        steps = max(1, math.ceil(self.t_end / self.dt - NODE_TOLERANCE))
        object.__setattr__(self, "dt", self.t_end / steps)
        object.__setattr__(self, "steps", steps)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.steps + 1)

    def index(self, t: float) -> int:
        k = int(round(t / self.dt))
        if not 0 <= k <= self.steps or abs(k * self.dt - t) > NODE_TOLERANCE * max(1.0, abs(t)):
            raise FlowError(f"t={t} is not a node of the time grid (dt={self.dt:g}, T={self.t_end:g})")
        return k

    def refined(self, factor: int = 10) -> "TimeGrid":
        return TimeGrid(self.t_end, self.dt / factor)


def rk4_step(u, x: np.ndarray, t: float, h: float) -> np.ndarray:
    k1 = u.velocity(x, t)
    k2 = u.velocity(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = u.velocity(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = u.velocity(x + h * k3, t + h)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _march(u, points, tg: TimeGrid, first: int, last: int, record: bool):
    """Step from node ``first`` to node ``last`` (backwards when last < first)."""
    x = np.array(points, dtype=float)
    direction = 1 if last >= first else -1
    h = direction * tg.dt
    nodes = tg.nodes
    periodic = u.grid is not None
    history = [x.copy()] if record else None
    for k in range(first, last, direction):
        x = rk4_step(u, x, nodes[k], h)
        if periodic:
            x = u.grid.wrap(x)
        if record:
            history.append(x)
    if not np.all(np.isfinite(x)):
        raise FlowError("trajectory left the finite range (velocity too large for dt?)")
    if record:
        # (N, nodes, 2) so that chunks concatenate along the seed axis
        return np.stack(history, axis=1)
    return x


def integrate_points(
    u, points, tg: TimeGrid, start: float = 0.0, stop: Optional[float] = None,
    record: bool = False, jobs: int = 1,
):
    """Flow a point cloud from ``start`` to ``stop`` (default ``t_end``).

    With ``record`` the positions at every visited node are returned, shaped
    (nodes, N, 2); otherwise the final positions, shaped (N, 2).
    """
    first = tg.index(start)
    last = tg.steps if stop is None else tg.index(stop)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    out = map_point_chunks(lambda chunk: _march(u, chunk, tg, first, last, record), points, jobs)
    return np.swapaxes(out, 0, 1) if record else out


def inverse_points(u, points, t: float, tg: TimeGrid, jobs: int = 1) -> np.ndarray:
    """Integrate the time-reversed ODE from time ``t`` back to 0."""
    last = tg.index(t)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    return map_point_chunks(lambda chunk: _march(u, chunk, tg, last, 0, False), points, jobs)


@dataclass(frozen=True, eq=False)
class Trajectory:
    seed: tuple
    times: np.ndarray
    positions: np.ndarray

    def at(self, t: float, tg: TimeGrid) -> np.ndarray:
        return self.positions[tg.index(t)]

    def rows(self):
        return [
            {"t": float(t), "x1": float(p[0]), "x2": float(p[1])}
            for t, p in zip(self.times, self.positions)
        ]


def integrate_trajectory(u, x0, tg: TimeGrid) -> Trajectory:
    x0 = np.asarray(x0, dtype=float)
    positions = integrate_points(u, x0[None, :], tg, record=True)[:, 0, :]
    positions[0] = x0
    return Trajectory(tuple(float(c) for c in x0), tg.nodes, positions)


def inverse_trajectory(u, x, t: float, tg: TimeGrid) -> np.ndarray:
    return inverse_points(u, np.asarray(x, dtype=float)[None, :], t, tg)[0]


@dataclass(frozen=True, eq=False)
class LipschitzBudget:
    times: np.ndarray
    integral: np.ndarray
    mu: np.ndarray
    local_integral: Optional[np.ndarray] = None

    def mu_at(self, t: float, tg: TimeGrid) -> float:
        return float(self.mu[tg.index(t)])

    def local_at(self, t: float, tg: TimeGrid) -> float:
        if self.local_integral is None:
            raise FlowError("budget was computed without a trajectory")
        return float(self.local_integral[tg.index(t)])


def lipschitz_budget(u, tg: TimeGrid, traj: Optional[Trajectory] = None) -> LipschitzBudget:
    """Gronwall budget I(t) = int_0^t ||grad u(s)||_inf ds and mu = exp(I)."""
    times = tg.nodes
    sup = np.array([u.grad_sup(t).value for t in times])
    integral = cumulative_trapezoid(sup, times, initial=0.0)
    # roundoff must not break monotonicity of a nonnegative integrand
    integral = np.maximum.accumulate(integral)
    local = None
    if traj is not None:
        local_sup = np.array(
            [
                largest_singular_value(u.gradient(p[None, :], t))[0]
                for t, p in zip(times, traj.positions)
            ]
        )
        local = np.maximum.accumulate(cumulative_trapezoid(local_sup, times, initial=0.0))
    return LipschitzBudget(times, integral, np.exp(integral), local)


def separation(u, a, b) -> np.ndarray:
    if u.grid is not None:
        return u.grid.separation(a, b)
    return np.asarray(a, dtype=float) - np.asarray(b, dtype=float)


def random_pairs(rng: np.random.Generator, count: int, half_period: float, max_separation: float):
    """Seeded pairs (alpha, beta) with 0 < |alpha - beta| <= max_separation."""
    alphas = rng.uniform(-half_period / 2.0, half_period / 2.0, size=(count, 2))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=count)
    lengths = max_separation * rng.uniform(1e-3, 1.0, size=count)
    betas = alphas + lengths[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return alphas, betas


@dataclass(frozen=True, eq=False)
class PairCheckReport:
    times: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    ratios: np.ndarray
    mu: np.ndarray
    slack: float

    @property
    def lower(self) -> np.ndarray:
        return 1.0 / (self.mu * (1.0 + self.slack))

    @property
    def upper(self) -> np.ndarray:
        return self.mu * (1.0 + self.slack)

    @property
    def violations(self) -> list:
        low = self.lower[:, None] * (1.0 - ENVELOPE_RTOL)
        high = self.upper[:, None] * (1.0 + ENVELOPE_RTOL)
        bad = np.argwhere((self.ratios < low) | (self.ratios > high))
        return [
            {
                "t": float(self.times[k]),
                "pair": int(j),
                "ratio": float(self.ratios[k, j]),
                "lower": float(self.lower[k]),
                "upper": float(self.upper[k]),
            }
            for k, j in bad
        ]

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary_rows(self):
        """Per-node extremes of the pair ratios against the bounds."""
        return [
            {
                "t": float(t),
                "min_ratio": float(self.ratios[k].min()),
                "max_ratio": float(self.ratios[k].max()),
                "lower": float(self.lower[k]),
                "upper": float(self.upper[k]),
                "mu_t": float(self.mu[k]),
            }
            for k, t in enumerate(self.times)
        ]


def bilipschitz_check(
    u, pairs, tg: TimeGrid, slack: float, budget: Optional[LipschitzBudget] = None,
    half_period: float = math.pi, jobs: int = 1,
) -> PairCheckReport:
    """Separation ratios |phi(a,t) - phi(b,t)| / |a - b| against [1/mu(t), mu(t)]."""
    alphas, betas = (np.asarray(p, dtype=float).reshape(-1, 2) for p in pairs)
    if len(alphas) != len(betas) or not len(alphas):
        raise FlowError("pairs must be two equally long, non-empty point lists")
    if slack < 0:
        raise FlowError(f"slack must be >= 0, got {slack}")
    if u.grid is not None:
        half_period = u.grid.half_period
    d0 = np.linalg.norm(separation(u, alphas, betas), axis=-1)
    if np.any(d0 == 0.0):
        raise FlowError(f"coincident pair at index {int(np.argmin(d0))}")
    if np.any(d0 > half_period / 4.0 * (1.0 + 1e-12)):
        raise FlowError(f"pair separation exceeds L/4 = {half_period / 4.0:g}")

    budget = budget or lipschitz_budget(u, tg)
    history = integrate_points(u, np.concatenate([alphas, betas]), tg, record=True, jobs=jobs)
    n = len(alphas)
    dt_sep = np.linalg.norm(separation(u, history[:, :n], history[:, n:]), axis=-1)
    report = PairCheckReport(tg.nodes, alphas, betas, dt_sep / d0[None, :], budget.mu, slack)
    if report.violations:
        logger.warning("bi-Lipschitz check: %d violation(s) among %d pairs", len(report.violations), n)
    return report


@dataclass(frozen=True)
class LogRatioRow:
    r: float
    min_ratio: float
    max_ratio: float
    envelope_low: float
    envelope_high: float

    @property
    def worst(self) -> float:
        return max(abs(self.max_ratio - 1.0), abs(self.min_ratio - 1.0))

    @property
    def inside(self) -> bool:
        return (
            self.min_ratio >= self.envelope_low * (1.0 - ENVELOPE_RTOL)
            and self.max_ratio <= self.envelope_high * (1.0 + ENVELOPE_RTOL)
        )


def log_ratio_check(
    u, x0, radii: Sequence[float], t: float, gamma: float, tg: TimeGrid,
    directions: int = 64, budget: Optional[LipschitzBudget] = None,
) -> list:
    """Ratio (log 1/|phi(a,t) - phi(b,t)|)^-gamma / (log 1/|a - b|)^-gamma on circles around x0."""
    if not gamma > 0:
        raise FlowError(f"log-ratio check requires γ > 0, got γ = {gamma}")
    budget = budget or lipschitz_budget(u, tg)
    log_mu = math.log(budget.mu_at(t, tg))
    x0 = np.asarray(x0, dtype=float)
    angles = 2.0 * np.pi * np.arange(directions) / directions
    unit = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    rows = []
    for r in radii:
        if not 0.0 < r <= S_MAX:
            raise FlowError(f"radius {r:g} outside (0, s_max={S_MAX}]")
        log_r = math.log(1.0 / r)
        if log_r <= log_mu:
            raise FlowError(
                f"log(1/r) = {log_r:.3g} <= log mu(t) = {log_mu:.3g}: envelope degenerate at r = {r:g}"
            )
        cloud = np.concatenate([x0[None, :], x0[None, :] + r * unit])
        moved = integrate_points(u, cloud, tg, stop=t)
        d = np.linalg.norm(separation(u, moved[1:], moved[0]), axis=-1)
        ratio = (log_r / np.log(1.0 / d)) ** gamma
        rows.append(
            LogRatioRow(
                float(r),
                float(ratio.min()),
                float(ratio.max()),
                (1.0 + log_mu / log_r) ** (-gamma),
                (1.0 - log_mu / log_r) ** (-gamma),
            )
        )
    return rows

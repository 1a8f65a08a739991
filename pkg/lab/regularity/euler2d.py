"""
Pseudo-spectral 2D Euler in vorticity form on the periodic box [-L, L)^2.

    omega_t + u . grad(omega) = 0,   curl u = omega,   div u = 0

Velocity comes from the stream function psi = (-Laplace)^-1 omega as
u = (d2 psi, -d1 psi), so that d1 u2 - d2 u1 = omega. Time stepping is
classical RK4 with the advection product dealiased by the 2/3 rule.
Odd-odd states are projected back onto the symmetry after every step, which
keeps the origin and both axes exactly at zero; the largest defect removed by
the projection is carried on the state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss
from scipy.integrate import cumulative_trapezoid

from .exceptions import (
    CFLViolation,
    EstimatorError,
    FieldError,
    MeanNotZeroError,
    ModulusDomainError,
    SolverError,
    SymmetryError,
)
from .fields import (
    Grid2,
    GriddedScalar,
    GriddedVelocity,
    scalar_catalog,
    spectral_ops,
    trigonometric_interpolate,
)
from .modcont import GridSampler, ModulusFamily, coefficient_profile, estimate_coefficient

logger = logging.getLogger(__name__)

CFL_LIMIT = 0.5
SYMMETRY_TOLERANCE = 1e-10
# kernel constant c0 of d1u1(0) = c0 * int_{Q} y1 y2 / |y|^4 omega(y) dy
ORIGIN_STRAIN_CONSTANT = 4.0 / math.pi
CSV_MAX_N = 64


def reflect(values: np.ndarray, axis: int) -> np.ndarray:
    """Node values of x -> f(..., -x_axis, ...); node m maps to node -m."""
    return np.roll(np.flip(values, axis=axis), 1, axis=axis)


def project_odd_odd(values: np.ndarray) -> np.ndarray:
    r1 = reflect(values, 0)
    return 0.25 * (values - r1 - reflect(values, 1) + reflect(r1, 1))


def is_odd_odd(values: np.ndarray, tol: float = SYMMETRY_TOLERANCE) -> bool:
    return bool(
        np.max(np.abs(values + reflect(values, 0))) <= tol
        and np.max(np.abs(values + reflect(values, 1))) <= tol
    )


@dataclass(frozen=True)
class SymmetryTag:
    odd_odd: bool = False


@dataclass(frozen=True, eq=False)
class EulerState:
    grid: Grid2
    omega: np.ndarray
    t: float = 0.0
    symmetry: SymmetryTag = SymmetryTag()
    # largest node defect the odd-odd projection has removed so far
    symmetry_defect: float = 0.0

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        n = self.grid.n
        if omega.shape != (n, n):
            raise FieldError(f"vorticity must have shape {(n, n)}, got {omega.shape}")
        if not np.all(np.isfinite(omega)):
            raise FieldError(f"non-finite vorticity at t={self.t}")
        mean = float(omega.mean())
        if abs(mean) > 1e-12 * max(1.0, float(np.abs(omega).max())):
            raise MeanNotZeroError(f"vorticity mean {mean:.3g} is not zero; Biot-Savart needs mean-zero data")
        if self.symmetry.odd_odd and not is_odd_odd(omega):
            raise SymmetryError("state tagged odd_odd is not odd in both coordinates")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "_coeffs", None)

    @property
    def odd_odd(self) -> bool:
        return self.symmetry.odd_odd

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            object.__setattr__(self, "_coeffs", spectral_ops(self.grid).forward(self.omega))
        return self._coeffs

    def as_scalar(self, order: str = "cubic") -> GriddedScalar:
        return GriddedScalar(self.grid, self.omega, order=order, name=f"omega@t={self.t:g}")

    def norm(self, p: int = 2) -> float:
        """Discrete L^p norm over the box."""
        h = self.grid.spacing
        return float((np.sum(np.abs(self.omega) ** p) * h * h) ** (1.0 / p))


def zero_state(grid: Grid2, odd_odd: bool = True) -> EulerState:
    return EulerState(grid, np.zeros((grid.n, grid.n)), 0.0, SymmetryTag(odd_odd))


def velocity_arrays(grid: Grid2, coeffs) -> np.ndarray:
    """Velocity components on the nodes, shape (2, n, n)."""
    ops = spectral_ops(grid)
    psi = coeffs * ops.inv_ksq
    return np.stack([ops.inverse(ops.ik2 * psi), ops.inverse(-ops.ik1 * psi)])


def biot_savart(s: EulerState) -> GriddedVelocity:
    return GriddedVelocity(s.grid, [s.t], velocity_arrays(s.grid, s.coeffs)[None])


def velocity_slices(states: Sequence[EulerState]) -> GriddedVelocity:
    """Stored states as a time-dependent gridded velocity for ``flow``."""
    return GriddedVelocity(
        states[0].grid,
        [s.t for s in states],
        np.stack([velocity_arrays(s.grid, s.coeffs) for s in states]),
    )


def curl(grid: Grid2, velocity: np.ndarray) -> np.ndarray:
    ops = spectral_ops(grid)
    return ops.inverse(ops.ik1 * ops.forward(velocity[1]) - ops.ik2 * ops.forward(velocity[0]))


def divergence(grid: Grid2, velocity: np.ndarray) -> np.ndarray:
    ops = spectral_ops(grid)
    return ops.inverse(ops.ik1 * ops.forward(velocity[0]) + ops.ik2 * ops.forward(velocity[1]))


def _rhs(grid: Grid2, coeffs):
    ops = spectral_ops(grid)
    u = velocity_arrays(grid, coeffs)
    product = u[0] * ops.inverse(ops.ik1 * coeffs) + u[1] * ops.inverse(ops.ik2 * coeffs)
    out = -ops.dealias * ops.forward(product)
    out[0, 0] = 0.0
    return out, u


def max_speed(grid: Grid2, coeffs) -> float:
    u = velocity_arrays(grid, coeffs)
    return float(np.sqrt(u[0] ** 2 + u[1] ** 2).max())


def check_cfl(s: EulerState, dt: float) -> float:
    speed = max_speed(s.grid, s.coeffs)
    courant = dt * speed / s.grid.spacing
    if courant > CFL_LIMIT:
        max_dt = CFL_LIMIT * s.grid.spacing / speed
        raise CFLViolation(courant, CFL_LIMIT, dt, max_dt)
    if courant > 0.8 * CFL_LIMIT:
        logger.warning("CFL number %.3g is close to the limit %g", courant, CFL_LIMIT)
    return courant


def _tracer_velocity(grid: Grid2, u: np.ndarray, points: np.ndarray) -> np.ndarray:
    wrapped = grid.wrap(points)
    return np.stack(
        [trigonometric_interpolate(grid, u[0], wrapped), trigonometric_interpolate(grid, u[1], wrapped)],
        axis=-1,
    )


def _rk4(s: EulerState, dt: float, tracers: Optional[np.ndarray] = None):
    grid = s.grid
    ops = spectral_ops(grid)
    c0 = s.coeffs
    k1, u1 = _rhs(grid, c0)
    k2, u2 = _rhs(grid, c0 + 0.5 * dt * k1)
    k3, u3 = _rhs(grid, c0 + 0.5 * dt * k2)
    k4, u4 = _rhs(grid, c0 + dt * k3)
    omega = ops.inverse(c0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    omega -= omega.mean()
    defect = s.symmetry_defect
    if s.odd_odd:
        projected = project_odd_odd(omega)
        defect = max(defect, float(np.max(np.abs(omega - projected))))
        omega = projected
    moved = None
    if tracers is not None and len(tracers):
        # tracers see the same RK4 stage velocities as the vorticity
        x = tracers
        v1 = _tracer_velocity(grid, u1, x)
        v2 = _tracer_velocity(grid, u2, x + 0.5 * dt * v1)
        v3 = _tracer_velocity(grid, u3, x + 0.5 * dt * v2)
        v4 = _tracer_velocity(grid, u4, x + dt * v3)
        moved = grid.wrap(x + (dt / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4))
    return EulerState(grid, omega, s.t + dt, s.symmetry, defect), moved


def step(s: EulerState, dt: float) -> EulerState:
    if not dt > 0:
        raise SolverError(f"time step must be positive, got {dt}")
    check_cfl(s, dt)
    return _rk4(s, dt)[0]


def evolve(s: EulerState, dt: float, steps: int, tracers=None):
    """Advance ``steps`` RK4 steps, carrying passive tracers along."""
    points = None if tracers is None else np.asarray(tracers, dtype=float).reshape(-1, 2)
    for _ in range(steps):
        check_cfl(s, dt)
        s, moved = _rk4(s, dt, points)
        if points is not None:
            points = moved
    return s, points


def bahouri_chemin_init(beta: float, g: Grid2) -> EulerState:
    """omega0 = 2 x1 x2 / (4 x1^2 + x2^2) |x|^beta near 0, cut off to zero on 1 <= |x| <= 1.5."""
    if not 0.0 < beta <= 1.0:
        raise ModulusDomainError(f"holder requires 0 < β ≤ 1, got β = {beta}")
    if g.half_period < 2.0:
        raise FieldError(f"the odd-odd scenario needs L >= 2, got L = {g.half_period}")
    values = scalar_catalog("bahouri_chemin", {"exponent": beta}).evaluate(g.nodes())
    return EulerState(g, project_odd_odd(values), 0.0, SymmetryTag(True))


def sample_state(name: str, params: dict, g: Grid2, odd_odd: bool = False) -> EulerState:
    """Initial vorticity from the scalar catalog, mean removed."""
    values = scalar_catalog(name, params).evaluate(g.nodes())
    values = values - values.mean()
    if odd_odd:
        values = project_odd_odd(values)
    return EulerState(g, values, 0.0, SymmetryTag(odd_odd))


def random_smooth_state(g: Grid2, seed: int = 0, k_max: int = 4, amplitude: float = 1.0) -> EulerState:
    """Seeded odd-odd vorticity from the modes sin(k s x1) sin(l s x2), s = pi / L, 1 <= k, l <= k_max.

    Mode amplitudes decay like 1 / (k^2 + l^2); the result is scaled to sup norm ``amplitude``.
    """
    if not 3 * k_max < g.n:
        raise FieldError(f"k_max = {k_max} is not resolved after dealiasing on n = {g.n}")
    rng = np.random.default_rng(seed)
    weights = rng.normal(size=(k_max, k_max))
    x1, x2 = g.mesh()
    scale = math.pi / g.half_period
    omega = np.zeros_like(x1)
    for k in range(1, k_max + 1):
        for l in range(1, k_max + 1):
            omega += weights[k - 1, l - 1] / (k * k + l * l) * np.sin(k * scale * x1) * np.sin(l * scale * x2)
    omega *= amplitude / np.abs(omega).max()
    return EulerState(g, project_odd_odd(omega), 0.0, SymmetryTag(True))


def eigenmode_velocity_error(g: Grid2) -> float:
    """Sup error of the recovered velocity for omega = sin(s x1) sin(s x2) against its closed form."""
    s = math.pi / g.half_period
    x1, x2 = g.mesh()
    state = EulerState(g, np.sin(s * x1) * np.sin(s * x2), 0.0, SymmetryTag(True))
    u = velocity_arrays(g, state.coeffs)
    exact = np.stack([np.sin(s * x1) * np.cos(s * x2), -np.cos(s * x1) * np.sin(s * x2)]) / (2.0 * s)
    return float(np.max(np.abs(u - exact)))


def origin_velocity(s: EulerState) -> float:
    """|u| at the origin node."""
    n = s.grid.n // 2
    u = velocity_arrays(s.grid, s.coeffs)
    return float(math.hypot(u[0, n, n], u[1, n, n]))


def _require_odd_odd(s: EulerState):
    if not s.odd_odd:
        raise SymmetryError("the state must carry the odd_odd symmetry tag")


def origin_strain_diagnostic(s: EulerState, inner_cutoff: float) -> float:
    """c0 * sum over first-quadrant nodes with |y| >= inner_cutoff of y1 y2 / |y|^4 omega h^2."""
    _require_odd_odd(s)
    h = s.grid.spacing
    if inner_cutoff < 2.0 * h * (1.0 - 1e-12):
        raise EstimatorError(f"inner cutoff {inner_cutoff:g} is below 2h = {2.0 * h:g}")
    y1, y2 = s.grid.mesh()
    rho2 = y1**2 + y2**2
    mask = (y1 > 0) & (y2 > 0) & (rho2 >= inner_cutoff**2)
    integrand = y1[mask] * y2[mask] / rho2[mask] ** 2 * s.omega[mask]
    return ORIGIN_STRAIN_CONSTANT * float(np.sum(integrand)) * h * h


def origin_strain_integral(
    f, inner: float, outer: float, panels_per_decade: int = 4, order: int = 16, angles: int = 64
) -> float:
    """The same integral for an analytic field, by Gauss-Legendre in (log rho, phi)."""
    if not 0.0 < inner < outer:
        raise EstimatorError(f"need 0 < inner < outer, got {inner:g}, {outer:g}")
    xs, ws = leggauss(order)
    panels = max(1, math.ceil(panels_per_decade * math.log10(outer / inner)))
    edges = np.linspace(math.log(inner), math.log(outer), panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    s_nodes = (mid[:, None] + half[:, None] * xs[None, :]).ravel()
    s_weights = (half[:, None] * ws[None, :]).ravel()
    xa, wa = leggauss(angles)
    phi = 0.25 * math.pi * (xa + 1.0)
    w_phi = 0.25 * math.pi * wa
    rho = np.exp(s_nodes)
    points = np.stack(
        [rho[:, None] * np.cos(phi)[None, :], rho[:, None] * np.sin(phi)[None, :]], axis=-1
    )
    # y1 y2 / |y|^4 dA = cos(phi) sin(phi) d(log rho) d(phi)
    kernel = (np.cos(phi) * np.sin(phi))[None, :]
    values = f.evaluate(points) * kernel
    return ORIGIN_STRAIN_CONSTANT * float(s_weights @ values @ w_phi)


def log_odd_strain_increment(gamma: float, inner: float, outer: float) -> float:
    """Closed form of the strain integral of the log_odd profile between two radii inside its plateau.

    The angular factor sin(2 phi) contributes pi / 8, so the value is c0 pi / 8 = 1/2 times
    int dr / (r (log 1/r)^gamma), which is log log(1/r) for gamma = 1.
    """
    if not 0.0 < inner < outer < 1.0:
        raise EstimatorError(f"need 0 < inner < outer < 1, got {inner:g}, {outer:g}")
    a, b = math.log(1.0 / inner), math.log(1.0 / outer)
    if math.isclose(gamma, 1.0):
        radial = math.log(a) - math.log(b)
    else:
        radial = (a ** (1.0 - gamma) - b ** (1.0 - gamma)) / (1.0 - gamma)
    return ORIGIN_STRAIN_CONSTANT * math.pi / 8.0 * radial


def vorticity_coefficient_at_origin(
    s: EulerState, m: ModulusFamily, radii, sampler=GridSampler(), plateau_tol: float = 0.01
):
    _require_odd_odd(s)
    profile = coefficient_profile(s.as_scalar(), (0.0, 0.0), m, radii, sampler, f_center=0.0)
    return estimate_coefficient(profile, plateau_tol)


def lagrangian_lower_bound(seed_values, positions, beta: float) -> np.ndarray:
    """omega0(x) / |phi(x, t)|^beta for tracked seeds, a lower bound of the sup ratio."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    return np.abs(np.asarray(seed_values, dtype=float)) / np.hypot(positions[:, 0], positions[:, 1]) ** beta


def lagrangian_deformation(times, strain) -> np.ndarray:
    """exp(int_0^t d1u1(0, s) ds) from the recorded origin-strain history."""
    return np.exp(cumulative_trapezoid(np.asarray(strain, dtype=float), np.asarray(times, dtype=float), initial=0.0))


def fit_exponential_rate(times, values) -> float:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2 or np.any(values <= 0):
        return math.nan
    return float(np.polyfit(times, np.log(values), 1)[0])


def save_checkpoint(s: EulerState, path) -> Path:
    """Header (n, L, t) little-endian 64-bit, then row-major float64 vorticity."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(np.array([s.grid.n], dtype="<i8").tobytes())
        fh.write(np.array([s.grid.half_period, s.t], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(s.omega, dtype="<f8").tobytes())
    return path


def load_checkpoint(path, odd_odd: Optional[bool] = None) -> EulerState:
    raw = Path(path).read_bytes()
    if len(raw) < 24:
        raise FieldError(f"{path}: truncated checkpoint header")
    n = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    L, t = np.frombuffer(raw[8:24], dtype="<f8")
    body = np.frombuffer(raw[24:], dtype="<f8")
    if body.size != n * n:
        raise FieldError(f"{path}: expected {n * n} values, found {body.size}")
    omega = body.reshape(n, n)
    if odd_odd is None:
        odd_odd = is_odd_odd(omega)
    return EulerState(Grid2(n, float(L)), omega, float(t), SymmetryTag(odd_odd))


def export_csv(s: EulerState, path) -> Path:
    if s.grid.n > CSV_MAX_N:
        raise FieldError(f"CSV export is limited to n <= {CSV_MAX_N}, got n = {s.grid.n}")
    x1, x2 = s.grid.mesh()
    frame = pd.DataFrame({"x1": x1.ravel(), "x2": x2.ravel(), "omega": s.omega.ravel()})
    frame.to_csv(path, index=False, float_format="%.17g")
    return Path(path)

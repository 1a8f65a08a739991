"""
Scalar and velocity fields on the periodic box [-L, L)^2.

Analytic fields wrap vectorised closures ``f(x1, x2)``; gridded fields hold
node values on a :class:`Grid2` and interpolate them (periodic cubic splines,
or the trigonometric interpolant for convergence studies). Every field is
immutable after construction.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .exceptions import FieldError

logger = logging.getLogger(__name__)

INTERPOLATION_ORDERS = ("cubic", "spectral")


@dataclass(frozen=True)
class Grid2:
    n: int
    half_period: float

    def __post_init__(self):
        if self.n < 16 or self.n & (self.n - 1):
            raise FieldError(f"grid size must be a power of two >= 16, got {self.n}")
        if not self.half_period > 0:
            raise FieldError(f"half-period must be positive, got {self.half_period}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_period / self.n

    @property
    def coords(self) -> np.ndarray:
        # h*m keeps x and -x bit-for-bit mirror images of each other
        return self.spacing * np.arange(-self.n // 2, self.n // 2)

    def mesh(self):
        return np.meshgrid(self.coords, self.coords, indexing="ij")

    def nodes(self) -> np.ndarray:
        x1, x2 = self.mesh()
        return np.stack([x1, x2], axis=-1)

    def wrap(self, points):
        """Map points into [-L, L)^2; points already inside are returned untouched."""
        points = np.asarray(points, dtype=float)
        L = self.half_period
        outside = (points < -L) | (points >= L)
        if not outside.any():
            return points
        return np.where(outside, np.mod(points + L, 2.0 * L) - L, points)

    def separation(self, a, b) -> np.ndarray:
        """Minimal-image difference a - b."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        period = 2.0 * self.half_period
        return d - period * np.round(d / period)

    def index_coordinates(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return (points / self.spacing + self.n // 2).reshape(-1, 2).T


@lru_cache(maxsize=16)
def spectral_ops(grid: Grid2) -> "SpectralOps":
    return SpectralOps(grid)


class SpectralOps:
    """Wavenumbers, derivative multipliers and the 2/3 dealiasing mask for rfft2 layouts."""

    def __init__(self, grid: Grid2):
        self.grid = grid
        n = grid.n
        k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
        k2 = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.spacing)
        self.k1 = k1[:, None]
        self.k2 = k2[None, :]
        self.ksq = self.k1**2 + self.k2**2
        self.inv_ksq = np.zeros_like(self.ksq)
        nonzero = self.ksq > 0
        self.inv_ksq[nonzero] = 1.0 / self.ksq[nonzero]
        # Nyquist modes carry no odd derivative
        d1 = k1.copy()
        d1[n // 2] = 0.0
        d2 = k2.copy()
        d2[-1] = 0.0
        self.ik1 = 1j * d1[:, None]
        self.ik2 = 1j * d2[None, :]
        kmax = np.pi / grid.spacing
        keep = (np.abs(self.k1) < (2.0 / 3.0) * kmax) & (np.abs(self.k2) < (2.0 / 3.0) * kmax)
        self.dealias = keep.astype(float)

    def forward(self, values):
        return np.fft.rfft2(values)

    def inverse(self, coeffs):
        return np.fft.irfft2(coeffs, s=(self.grid.n, self.grid.n))

    def gradient(self, values) -> np.ndarray:
        """Spectral gradient, shape (2, n, n)."""
        coeffs = self.forward(values)
        return np.stack([self.inverse(self.ik1 * coeffs), self.inverse(self.ik2 * coeffs)])


def map_point_chunks(fn: Callable[[np.ndarray], np.ndarray], points, jobs: int = 1):
    """Apply ``fn`` to a point cloud, optionally split over worker threads.

    Results are concatenated in input order, so the output does not depend on
    the number of workers.
    """
    points = np.asarray(points, dtype=float)
    if jobs <= 1 or len(points) < 2 * jobs:
        return fn(points)
    chunks = np.array_split(points, jobs)
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        parts = list(executor.map(fn, chunks))
    return np.concatenate(parts, axis=0)


def smooth_step(tau):
    """C-infinity step: 1 for tau <= 0, 0 for tau >= 1."""
    tau = np.clip(np.asarray(tau, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(tau < 1.0, np.exp(-1.0 / np.where(tau < 1.0, 1.0 - tau, 1.0)), 0.0)
        b = np.where(tau > 0.0, np.exp(-1.0 / np.where(tau > 0.0, tau, 1.0)), 0.0)
    return a / (a + b)


def radial_cutoff(radius, inner: float, outer: float):
    return smooth_step((np.asarray(radius) - inner) / (outer - inner))


# Scalar fields


@dataclass(frozen=True)
class KnownCoefficient:
    """Exact pointwise coefficient of an analytic field at ``center``."""

    family: str
    exponent: float
    value: float
    center: tuple = (0.0, 0.0)


@dataclass(frozen=True, eq=False)
class AnalyticScalar:
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "analytic"
    params: Mapping[str, float] = field(default_factory=dict)
    known: Optional[KnownCoefficient] = None

    grid = None

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.asarray(self.func(points[..., 0], points[..., 1]), dtype=float)


@dataclass(frozen=True, eq=False)
class GriddedScalar:
    grid: Grid2
    values: np.ndarray
    order: str = "cubic"
    name: str = "gridded"
    known: Optional[KnownCoefficient] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n, self.grid.n):
            raise FieldError(f"expected {(self.grid.n,) * 2} node values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise FieldError(f"non-finite node values in field '{self.name}'")
        if self.order not in INTERPOLATION_ORDERS:
            raise FieldError(f"unknown interpolation order '{self.order}'")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(
            self, "_coeffs", ndimage.spline_filter(values, order=3, mode="grid-wrap")
        )

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        wrapped = self.grid.wrap(points)
        if self.order == "spectral":
            out = trigonometric_interpolate(self.grid, self.values, wrapped.reshape(-1, 2))
        else:
            out = ndimage.map_coordinates(
                self._coeffs,
                self.grid.index_coordinates(wrapped),
                order=3,
                mode="grid-wrap",
                prefilter=False,
            )
        return out.reshape(shape)

    def with_order(self, order: str) -> "GriddedScalar":
        return GriddedScalar(self.grid, self.values, order=order, name=self.name, known=self.known)


def trigonometric_interpolate(grid: Grid2, values, points, chunk: int = 512) -> np.ndarray:
    """Evaluate the trigonometric interpolant of node values at arbitrary points."""
    n = grid.n
    coeffs = np.fft.fft2(values) / (n * n)
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
    L = grid.half_period
    out = np.empty(len(points))
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        e1 = np.exp(1j * (block[:, 0:1] + L) * k[None, :])
        e2 = np.exp(1j * (block[:, 1:2] + L) * k[None, :])
        out[start : start + chunk] = np.real(np.sum((e1 @ coeffs) * e2, axis=1))
    return out


ScalarField = Union[AnalyticScalar, GriddedScalar]


def eval_scalar(f: ScalarField, x) -> float:
    value = float(f.evaluate(np.asarray(x, dtype=float)[None, :])[0])
    if not math.isfinite(value):
        raise FieldError(f"field '{f.name}' returned {value} at {tuple(x)}")
    return value


def sample_to_grid(f: AnalyticScalar, grid: Grid2, order: str = "cubic") -> GriddedScalar:
    values = f.evaluate(grid.nodes())
    if not np.all(np.isfinite(values)):
        raise FieldError(f"field '{f.name}' is not finite on the {grid.n}^2 grid")
    return GriddedScalar(grid, values, order=order, name=f.name, known=f.known)


def _radius(x1, x2):
    return np.hypot(x1, x2)


def _log_power(radius, gamma):
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(
            (radius > 0) & (radius < 1.0),
            np.log(1.0 / np.where(radius > 0, radius, 1.0)) ** (-gamma),
            np.where(radius > 0, 1.0, 0.0),
        )
    return np.minimum(value, 1.0)


def _bahouri_chemin(x1, x2, beta):
    radius = _radius(x1, x2)
    denom = 4.0 * x1**2 + x2**2
    with np.errstate(divide="ignore", invalid="ignore"):
        angular = np.where(denom > 0, 2.0 * x1 * x2 / np.where(denom > 0, denom, 1.0), 0.0)
    return angular * radius**beta * radial_cutoff(radius, 1.0, 1.5)


def _log_odd(x1, x2, gamma):
    radius = _radius(x1, x2)
    with np.errstate(divide="ignore", invalid="ignore"):
        angular = np.where(radius > 0, 2.0 * x1 * x2 / np.where(radius > 0, radius, 1.0) ** 2, 0.0)
    return angular * _log_power(radius, gamma) * radial_cutoff(radius, 0.25, 0.5)


def _exponent(params, low=0.0, high=math.inf, label="exponent"):
    value = float(params.get("exponent", 0.5))
    if not low < value <= high:
        raise FieldError(f"{label} must lie in ({low:g}, {high:g}], got {value}")
    return value


def scalar_catalog(name: str, params: Optional[Mapping[str, float]] = None) -> AnalyticScalar:
    """Resolve a named analytic scalar field; ``params`` follow :data:`SCALAR_DEFAULTS`."""
    merged = dict(SCALAR_DEFAULTS.get(name, {}))
    merged.update(params or {})
    L = float(merged.get("half_period", math.pi))
    if name == "zero":
        return AnalyticScalar(lambda x1, x2: np.zeros_like(x1), name, merged)
    if name == "constant":
        c = float(merged["value"])
        return AnalyticScalar(lambda x1, x2: np.full_like(x1, c), name, merged)
    if name == "sin_cos":
        return AnalyticScalar(lambda x1, x2: np.sin(x1) * np.cos(x2), name, merged)
    if name == "cosine":
        return AnalyticScalar(lambda x1, x2: np.cos(x1), name, merged)
    if name == "power":
        beta = _exponent(merged, high=1.0)
        return AnalyticScalar(
            lambda x1, x2: _radius(x1, x2) ** beta
            * radial_cutoff(_radius(x1, x2), L / 4.0, L / 2.0),
            name,
            merged,
            KnownCoefficient("holder", beta, 1.0),
        )
    if name == "log_power":
        gamma = _exponent(merged)
        return AnalyticScalar(
            lambda x1, x2: _log_power(_radius(x1, x2), gamma)
            * radial_cutoff(_radius(x1, x2), L / 4.0, L / 2.0),
            name,
            merged,
            KnownCoefficient("log_holder", gamma, 1.0),
        )
    if name == "bahouri_chemin":
        beta = _exponent(merged, high=1.0)
        return AnalyticScalar(
            lambda x1, x2: _bahouri_chemin(x1, x2, beta),
            name,
            merged,
            KnownCoefficient("holder", beta, 0.5),
        )
    if name == "log_odd":
        gamma = _exponent(merged)
        return AnalyticScalar(lambda x1, x2: _log_odd(x1, x2, gamma), name, merged)
    raise FieldError(f"unknown scalar field '{name}'")


SCALAR_DEFAULTS = {
    "zero": {},
    "constant": {"value": 1.0},
    "sin_cos": {},
    "cosine": {},
    "power": {"exponent": 0.5, "half_period": math.pi},
    "log_power": {"exponent": 0.5, "half_period": math.pi},
    "bahouri_chemin": {"exponent": 0.5},
    "log_odd": {"exponent": 1.0},
}


# Velocity fields


@dataclass(frozen=True)
class GradBound:
    t: float
    value: float


def largest_singular_value(matrices) -> np.ndarray:
    """Operator 2-norm of a stack of matrices shaped (..., 2, 2)."""
    matrices = np.asarray(matrices, dtype=float)
    return np.linalg.svd(matrices, compute_uv=False)[..., 0]


@dataclass(frozen=True, eq=False)
class AnalyticVelocity:
    kind: str
    params: Mapping[str, float]
    u: Callable
    grad: Callable
    sup_grad: float

    grid = None

    def check_time(self, t):
        if not math.isfinite(t):
            raise FieldError(f"invalid time {t}")

    def velocity(self, points, t: float = 0.0) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self.u(points[..., 0], points[..., 1])

    def gradient(self, points, t: float = 0.0) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self.grad(points[..., 0], points[..., 1])

    def grad_sup(self, t: float = 0.0) -> GradBound:
        self.check_time(t)
        return GradBound(t, self.sup_grad)

    def divergence(self, points, t: float = 0.0) -> np.ndarray:
        g = self.gradient(points, t)
        return g[..., 0, 0] + g[..., 1, 1]


def _matrix(a, b, c, d):
    return np.stack([np.stack([a, b], axis=-1), np.stack([c, d], axis=-1)], axis=-2)


def velocity_catalog(kind: str, params: Optional[Mapping[str, float]] = None) -> AnalyticVelocity:
    """Resolve ``{kind: ..., <param>: ...}`` from a config file into a velocity field."""
    if kind not in VELOCITY_DEFAULTS:
        raise FieldError(f"unknown velocity field '{kind}'")
    merged = dict(VELOCITY_DEFAULTS[kind])
    unknown = set(params or {}) - set(merged)
    if unknown:
        raise FieldError(f"velocity '{kind}' has no parameter(s) {sorted(unknown)}")
    merged.update({key: float(value) for key, value in (params or {}).items()})

    if kind == "zero":

        def u(x1, x2):
            return np.stack([np.zeros_like(x1), np.zeros_like(x2)], axis=-1)

        def grad(x1, x2):
            zero = np.zeros_like(x1)
            return _matrix(zero, zero, zero, zero)

        sup = 0.0
    elif kind == "rigid_rotation":
        om = merged["omega"]

        def u(x1, x2):
            return np.stack([-om * x2, om * x1], axis=-1)

        def grad(x1, x2):
            zero = np.zeros_like(x1)
            return _matrix(zero, zero - om, zero + om, zero)

        sup = abs(om)
    elif kind == "linear_strain":
        lam = merged["lambda"]

        def u(x1, x2):
            return np.stack([lam * x1, -lam * x2], axis=-1)

        def grad(x1, x2):
            zero = np.zeros_like(x1)
            return _matrix(zero + lam, zero, zero, zero - lam)

        sup = abs(lam)
    elif kind == "shear":
        lam = merged["lambda"]

        def u(x1, x2):
            return np.stack([lam * x2, np.zeros_like(x1)], axis=-1)

        def grad(x1, x2):
            zero = np.zeros_like(x1)
            return _matrix(zero, zero + lam, zero, zero)

        sup = abs(lam)
    else:
        amp = merged["amplitude"]

        def u(x1, x2):
            return np.stack(
                [-amp * np.sin(x1) * np.cos(x2), amp * np.cos(x1) * np.sin(x2)], axis=-1
            )

        def grad(x1, x2):
            cc = amp * np.cos(x1) * np.cos(x2)
            ss = amp * np.sin(x1) * np.sin(x2)
            return _matrix(-cc, ss, -ss, cc)

        # sigma_max = |A|(|cos x1 cos x2| + |sin x1 sin x2|), attained on x1 = x2
        sup = abs(amp)

    return AnalyticVelocity(kind, merged, u, grad, sup)


VELOCITY_DEFAULTS = {
    "zero": {},
    "rigid_rotation": {"omega": 1.0},
    "linear_strain": {"lambda": 1.0},
    "shear": {"lambda": 1.0},
    "cellular": {"amplitude": 1.0},
}


@dataclass(frozen=True, eq=False)
class GriddedVelocity:
    """Velocity time slices on a grid: cubic splines in space, linear in time."""

    grid: Grid2
    times: Sequence[float]
    slices: np.ndarray
    kind: str = "gridded"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        slices = np.array(self.slices, dtype=float)
        n = self.grid.n
        if slices.shape != (len(times), 2, n, n):
            raise FieldError(f"velocity slices must have shape (T, 2, {n}, {n}), got {slices.shape}")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise FieldError("velocity slice times must be strictly increasing")
        if not np.all(np.isfinite(slices)):
            raise FieldError("non-finite gridded velocity")
        ops = spectral_ops(self.grid)
        grads = np.stack(
            [np.stack([ops.gradient(s[0]), ops.gradient(s[1])]) for s in slices]
        )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "_grads", grads)
        object.__setattr__(
            self,
            "_u_coeffs",
            np.stack(
                [[ndimage.spline_filter(c, order=3, mode="grid-wrap") for c in s] for s in slices]
            ),
        )
        object.__setattr__(
            self,
            "_g_coeffs",
            np.stack(
                [
                    [
                        [ndimage.spline_filter(c, order=3, mode="grid-wrap") for c in row]
                        for row in g
                    ]
                    for g in grads
                ]
            ),
        )

    @property
    def params(self):
        return {"n": self.grid.n, "half_period": self.grid.half_period, "slices": len(self.times)}

    def check_time(self, t: float):
        lo, hi = self.times[0], self.times[-1]
        slack = 1e-12 * max(1.0, abs(hi))
        if not lo - slack <= t <= hi + slack:
            raise FieldError(f"t={t} outside the stored range [{lo}, {hi}]")

    def _bracket(self, t):
        self.check_time(t)
        if len(self.times) == 1:
            return 0, 0, 0.0
        i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        w = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return i, i + 1, float(np.clip(w, 0.0, 1.0))

    def _interp(self, coeffs, points):
        coords = self.grid.index_coordinates(self.grid.wrap(points))
        return ndimage.map_coordinates(coeffs, coords, order=3, mode="grid-wrap", prefilter=False)

    def velocity(self, points, t: float) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        i, j, w = self._bracket(t)
        out = []
        for c in range(2):
            a = self._interp(self._u_coeffs[i, c], points)
            if w > 0.0:
                a = (1.0 - w) * a + w * self._interp(self._u_coeffs[j, c], points)
            out.append(a)
        return np.stack(out, axis=-1).reshape(points.shape)

    def gradient(self, points, t: float) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        i, j, w = self._bracket(t)
        out = np.empty((len(points.reshape(-1, 2)), 2, 2))
        for a in range(2):
            for b in range(2):
                v = self._interp(self._g_coeffs[i, a, b], points)
                if w > 0.0:
                    v = (1.0 - w) * v + w * self._interp(self._g_coeffs[j, a, b], points)
                out[:, a, b] = v
        return out.reshape(points.shape[:-1] + (2, 2))

    def node_gradient(self, t: float) -> np.ndarray:
        i, j, w = self._bracket(t)
        g = self._grads[i]
        if w > 0.0:
            g = (1.0 - w) * g + w * self._grads[j]
        return np.moveaxis(g, (0, 1), (-2, -1))

    def grad_sup(self, t: float) -> GradBound:
        return GradBound(t, float(largest_singular_value(self.node_gradient(t)).max()))

    def divergence(self, points, t: float) -> np.ndarray:
        g = self.gradient(points, t)
        return g[..., 0, 0] + g[..., 1, 1]


VelocityField = Union[AnalyticVelocity, GriddedVelocity]


def eval_velocity(u: VelocityField, x, t: float = 0.0) -> np.ndarray:
    u.check_time(t)
    return u.velocity(np.asarray(x, dtype=float)[None, :], t)[0]


def grad_sup(u: VelocityField, t: float = 0.0) -> GradBound:
    return u.grad_sup(t)


def list_scenarios():
    """Catalog names with their default parameters, for ``lab list-scenarios``."""
    return {
        "velocity": {name: dict(defaults) for name, defaults in VELOCITY_DEFAULTS.items()},
        "scalar": {name: dict(defaults) for name, defaults in SCALAR_DEFAULTS.items()},
    }

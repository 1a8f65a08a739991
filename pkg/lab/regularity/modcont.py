"""
Moduli of continuity and pointwise coefficient estimation.

The coefficient of ``f`` at ``x0`` for a modulus ``delta`` is the limit as
r -> 0 of sup over B_r(x0) of |f(x) - f(x0)| / delta(|x - x0|). A profile
samples that sup on a decreasing radius ladder; the estimator reads off the
smallest-radius value and judges whether the ladder has reached a plateau.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import EstimatorError, ModulusDomainError
from .fields import GriddedScalar, map_point_chunks

logger = logging.getLogger(__name__)

S_MAX = 0.3
MIN_RADII = 4
GRID_RESOLUTION_CELLS = 4

CONVERGED = "converged"
PLATEAU_NOT_REACHED = "plateau_not_reached"
RESOLUTION_LIMITED = "resolution_limited"


@dataclass(frozen=True)
class ModulusFamily:
    kind: str
    exponent: float

    def __post_init__(self):
        if self.kind == "holder":
            if not 0.0 < self.exponent <= 1.0:
                raise ModulusDomainError(
                    f"holder requires 0 < β ≤ 1, got β = {self.exponent}"
                )
        elif self.kind == "log_holder":
            if not (self.exponent > 0.0 and math.isfinite(self.exponent)):
                raise ModulusDomainError(f"log_holder requires γ > 0, got γ = {self.exponent}")
        else:
            raise ModulusDomainError(f"unknown modulus family '{self.kind}'")

    @property
    def label(self) -> str:
        return f"{self.kind}({self.exponent:g})"

    def values(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if np.any(~(s > 0.0)) or np.any(s > S_MAX):
            raise ModulusDomainError(f"modulus evaluated outside (0, {S_MAX}]")
        if self.kind == "holder":
            return s**self.exponent
        return np.log(1.0 / s) ** (-self.exponent)


def modulus_value(m: ModulusFamily, s: float) -> float:
    if not 0.0 < s <= S_MAX:
        raise ModulusDomainError(f"s = {s} outside (0, {S_MAX}]")
    return float(m.values(s))


@dataclass(frozen=True)
class DirectionSweep:
    """Equi-angular directions on concentric circles, for analytic or interpolated fields."""

    directions: int = 720
    shells_per_step: int = 4
    offset: float = 0.0

    kind = "sweep"

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "directions": self.directions,
            "shells_per_step": self.shells_per_step,
            "offset": self.offset,
        }

    def shell_radii(self, radii: np.ndarray) -> np.ndarray:
        m = self.shells_per_step
        shells = []
        for k, r in enumerate(radii):
            nxt = radii[k + 1] if k + 1 < len(radii) else r * r / radii[k - 1]
            q = nxt / r
            shells.extend(r * q ** (i / m) if i else r for i in range(m))
        last = radii[-1] * radii[-1] / radii[-2]
        shells.append(last)
        return np.asarray(shells)

    def offsets(self, radii: np.ndarray):
        shells = self.shell_radii(radii)
        angles = 2.0 * np.pi * (np.arange(self.directions) + self.offset) / self.directions
        unit = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        offsets = shells[:, None, None] * unit[None, :, :]
        distances = np.repeat(shells, self.directions)
        shell_index = np.repeat(np.arange(len(shells)), self.directions)
        return offsets.reshape(-1, 2), distances, shells, shell_index


@dataclass(frozen=True)
class GridSampler:
    """All grid nodes inside the ball; annuli follow the radius ladder downwards."""

    kind = "grid"

    def describe(self) -> dict:
        return {"kind": self.kind}

    def offsets(self, radii: np.ndarray, f: GriddedScalar, center):
        grid = f.grid
        nodes = grid.nodes().reshape(-1, 2)
        diff = grid.separation(nodes, np.asarray(center, dtype=float))
        dist = np.hypot(diff[:, 0], diff[:, 1])
        keep = (dist <= radii[0]) & (dist > 1e-12 * grid.spacing)
        diff, dist = diff[keep], dist[keep]
        edges = list(radii)
        ratio = radii[-1] / radii[-2]
        while edges[-1] * ratio >= grid.spacing * 0.5:
            edges.append(edges[-1] * ratio)
        edges = np.asarray(edges)
        # shell j holds points with edges[j+1] < d <= edges[j]
        shell_index = np.searchsorted(-edges, -dist, side="right") - 1
        shell_index = np.clip(shell_index, 0, len(edges) - 1)
        return diff, dist, edges, shell_index


SamplerSpec = Union[DirectionSweep, GridSampler]


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    center: tuple
    family: ModulusFamily
    radii: np.ndarray
    sup_ratios: np.ndarray
    sampler: dict
    shell_radii: Optional[np.ndarray] = None
    shell_maxima: Optional[np.ndarray] = None
    tolerance: float = 1e-12

    def rows(self):
        return [{"r": float(r), "S": float(s)} for r, s in zip(self.radii, self.sup_ratios)]


@dataclass(frozen=True)
class CoefficientEstimate:
    value: float
    window: tuple
    flag: str
    slope: float
    monotone: bool = True
    family: str = ""

    @property
    def converged(self) -> bool:
        return self.flag == CONVERGED


def geometric_radii(start: float, stop: float, ratio: float = 0.5, floor: float = 0.0):
    """r_k = start * ratio**k, kept while r_k >= max(stop, floor)."""
    if not 0.0 < ratio < 1.0:
        raise EstimatorError(f"radius ratio must lie in (0, 1), got {ratio}")
    if not 0.0 < start <= S_MAX:
        raise EstimatorError(f"radii must lie in (0, s_max={S_MAX}], got start {start}")
    lower = max(stop, floor)
    count = int(math.floor(math.log(lower / start) / math.log(ratio) + 1e-9)) + 1 if lower > 0 else 0
    if count < 1:
        raise EstimatorError(f"no radius of the ladder lies above {lower:g}")
    return start * ratio ** np.arange(count)


def validate_radii(radii: Sequence[float], h_min: float = 0.0) -> np.ndarray:
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2:
        raise EstimatorError("a profile needs at least two radii")
    if np.any(radii <= 0.0) or np.any(np.diff(radii) >= 0.0):
        raise EstimatorError("radii must be positive and strictly decreasing")
    if radii[0] > S_MAX:
        raise EstimatorError(f"radii must lie in (0, s_max={S_MAX}] (modcont bound), got {radii[0]:g}")
    if radii[-1] < h_min * (1.0 - 1e-12):
        raise EstimatorError(
            f"smallest radius {radii[-1]:g} is below the resolution limit {h_min:g}"
        )
    return radii


def coefficient_profile(
    f,
    center,
    m: ModulusFamily,
    radii: Sequence[float],
    sampler: SamplerSpec = DirectionSweep(),
    jobs: int = 1,
    f_center: Optional[float] = None,
) -> CoefficientProfile:
    """Sup of |f(x) - f(x0)| / delta(|x - x0|) over each ball of the ladder.

    Sample sets nest: the ball of radius r_k contains every shell at or below
    r_k, so S is nonincreasing along the ladder by construction.
    """
    center = np.asarray(center, dtype=float)
    grid = getattr(f, "grid", None)
    h_min = GRID_RESOLUTION_CELLS * grid.spacing if grid is not None else 0.0
    radii = validate_radii(radii, h_min)

    if isinstance(sampler, GridSampler):
        if not isinstance(f, GriddedScalar):
            raise EstimatorError("the grid sampler needs a gridded field")
        offsets, dist, shells, shell_index = sampler.offsets(radii, f, center)
    else:
        offsets, dist, shells, shell_index = sampler.offsets(radii)

    if f_center is None:
        f_center = float(f.evaluate(center[None, :])[0])
    values = map_point_chunks(f.evaluate, center[None, :] + offsets, jobs)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratios = np.abs(values - f_center) / m.values(dist)
    if not np.all(np.isfinite(ratios)):
        raise EstimatorError(f"non-finite ratio in the profile of '{getattr(f, 'name', f)}'")

    shell_maxima = np.full(len(shells), np.nan)
    np.fmax.at(shell_maxima, shell_index, ratios)

    sup = np.empty(len(radii))
    for k, r in enumerate(radii):
        inside = shells <= r * (1.0 + 1e-12)
        occupied = inside & ~np.isnan(shell_maxima)
        if not occupied.any():
            raise EstimatorError(f"empty sample set for radius {r:g}")
        sup[k] = np.max(shell_maxima[occupied])

    return CoefficientProfile(
        center=tuple(float(c) for c in center),
        family=m,
        radii=radii,
        sup_ratios=sup,
        sampler=sampler.describe(),
        shell_radii=shells,
        shell_maxima=shell_maxima,
        tolerance=1e-12 * max(1.0, float(np.max(sup))),
    )


def estimate_coefficient(p: CoefficientProfile, plateau_tol: float) -> CoefficientEstimate:
    radii, sup = np.asarray(p.radii), np.asarray(p.sup_ratios)
    if len(radii) < MIN_RADII:
        raise EstimatorError(f"at least {MIN_RADII} radii are needed, got {len(radii)}")
    value = float(sup[-1])
    slope = float(np.polyfit(np.log(radii[-MIN_RADII:]), sup[-MIN_RADII:], 1)[0])
    monotone = bool(np.all(np.diff(sup) <= p.tolerance))
    window = (float(radii[-MIN_RADII]), float(radii[-1]))

    flag = CONVERGED if abs(slope) <= plateau_tol and monotone else PLATEAU_NOT_REACHED
    if p.shell_radii is not None and p.shell_maxima is not None:
        inner = (p.shell_radii <= radii[-1] * (1.0 + 1e-12)) & ~np.isnan(p.shell_maxima)
        inner_maxima = p.shell_maxima[inner]
        if len(inner_maxima) >= 2:
            edge, innermost = inner_maxima[0], inner_maxima[-1]
            # sup attained at the sampling floor: the limit lies beyond resolution
            if innermost > edge * (1.0 + plateau_tol) + p.tolerance:
                flag = RESOLUTION_LIMITED
    if flag != CONVERGED:
        logger.warning(
            "coefficient estimate %s at %s: %s (slope %.3g, value %.6g)",
            p.family.label,
            p.center,
            flag,
            slope,
            value,
        )
    return CoefficientEstimate(value, window, flag, slope, monotone, p.family.label)


def sandwich_bounds(coeff0: float, beta: float, budget: float):
    """Hölder coefficient bounds coeff0 * exp(-+beta * budget) along a trajectory."""
    if coeff0 < 0 or budget < 0:
        raise ModulusDomainError("sandwich bounds need coeff0 >= 0 and budget >= 0")
    if not 0.0 < beta <= 1.0:
        raise ModulusDomainError(f"holder requires 0 < β ≤ 1, got β = {beta}")
    return coeff0 * math.exp(-beta * budget), coeff0 * math.exp(beta * budget)


@dataclass(frozen=True)
class SupCoefficient:
    center: tuple
    estimate: CoefficientEstimate
    estimates: list = field(default_factory=list)


def sup_coefficient(f, centers, m, radii, sampler=DirectionSweep(), plateau_tol=0.01, jobs=1):
    """Largest pointwise coefficient over a finite set of centres."""
    estimates = [
        estimate_coefficient(coefficient_profile(f, c, m, radii, sampler, jobs), plateau_tol)
        for c in centers
    ]
    if not estimates:
        raise EstimatorError("sup_coefficient needs at least one centre")
    best = int(np.argmax([e.value for e in estimates]))
    return SupCoefficient(tuple(float(x) for x in centers[best]), estimates[best], estimates)

"""Piecewise-linear generation distributions.

A :class:`GenerationDistribution` stores the knots of a CDF that is linear
between consecutive knots. Two knots may share an x-value, which encodes a
point mass (the CDF jumps there); the all-equal case is a degenerate
distribution. Every moment used downstream is evaluated in closed form per
segment, so no quadrature error leaks into the equilibrium solvers.

All query functions accept scalars or numpy arrays and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

_TOL = 1e-12


@dataclass(frozen=True)
class GenerationSample:
    """One observed generation value for a (month, hour) cell."""

    month: int
    hour: int
    value: float

    def __post_init__(self) -> None:
        if self.month < 1 or self.hour < 1:
            raise ConfigError(f"month and hour are 1-based, got ({self.month}, {self.hour})")
        if not math.isfinite(self.value) or self.value < 0:
            raise ConfigError(f"generation must be a finite nonnegative number, got {self.value}")


@dataclass(frozen=True)
class ScenarioWeights:
    """Month probabilities and the number of hours per day.

    Hours inside a month are weighted uniformly.
    """

    month_probabilities: tuple[float, ...]
    hours_per_day: int

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.month_probabilities)
        object.__setattr__(self, "month_probabilities", probs)
        if not probs:
            raise ConfigError("at least one month is required")
        if any(p < 0 for p in probs):
            raise ConfigError("month probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ConfigError(f"month probabilities sum to {sum(probs)!r}, not 1")
        if self.hours_per_day < 1:
            raise ConfigError("hours_per_day must be positive")

    @classmethod
    def uniform(cls, months: int, hours_per_day: int) -> "ScenarioWeights":
        return cls(tuple([1.0 / months] * months), hours_per_day)

    @property
    def months(self) -> int:
        return len(self.month_probabilities)

    def cell_weight(self, month: int, hour: int) -> float:
        """Weight of the 1-based (month, hour) cell in the overall expectation."""
        return self.month_probabilities[month - 1] / self.hours_per_day


@dataclass(frozen=True, eq=False)
class GenerationDistribution:
    """Continuous piecewise-linear CDF, possibly with jumps at repeated knots.

    ``xs`` and ``ps`` are the knot coordinates. ``xs`` is nondecreasing and
    starts at a nonnegative value; ``ps`` is nondecreasing from 0 to 1. Below
    ``xs[0]`` the CDF is 0 and above ``xs[-1]`` it is 1.
    """

    xs: np.ndarray
    ps: np.ndarray
    _seg_mass: np.ndarray = field(init=False, repr=False)
    _seg_width: np.ndarray = field(init=False, repr=False)
    _cum_area: np.ndarray = field(init=False, repr=False)
    _cum_moment: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        xs = np.array(self.xs, dtype=float)
        ps = np.array(self.ps, dtype=float)
        if xs.ndim != 1 or xs.shape != ps.shape or xs.size < 2:
            raise ConfigError("knots need matching 1-D x and p arrays with at least two entries")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
            raise ConfigError("knots must be finite")
        if xs[0] < 0:
            raise ConfigError("generation support must be nonnegative")
        if np.any(np.diff(xs) < 0) or np.any(np.diff(ps) < 0):
            raise ConfigError("knots must be nondecreasing in both coordinates")
        if abs(ps[0]) > _TOL or abs(ps[-1] - 1.0) > _TOL:
            raise ConfigError("CDF knots must run from probability 0 to 1")
        ps[0], ps[-1] = 0.0, 1.0
        xs.setflags(write=False)
        ps.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ps", ps)

        mass = np.diff(ps)
        width = np.diff(xs)
        # Area under F on each segment and first moment of each segment's mass.
        area = width * (ps[:-1] + 0.5 * mass)
        moment = mass * 0.5 * (xs[:-1] + xs[1:])
        object.__setattr__(self, "_seg_mass", mass)
        object.__setattr__(self, "_seg_width", width)
        object.__setattr__(self, "_cum_area", np.concatenate(([0.0], np.cumsum(area))))
        object.__setattr__(self, "_cum_moment", np.concatenate(([0.0], np.cumsum(moment))))

    # -- structure ---------------------------------------------------------

    @property
    def support_min(self) -> float:
        return float(self.xs[0])

    @property
    def support_max(self) -> float:
        return float(self.xs[-1])

    @property
    def is_point_mass(self) -> bool:
        return bool(self.xs[-1] - self.xs[0] <= _TOL)

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ps.tolist()))

    # -- queries -----------------------------------------------------------

    def cdf(self, x):
        """Right-continuous CDF value."""
        x_arr = np.asarray(x, dtype=float)
        xs, ps = self.xs, self.ps
        idx = np.searchsorted(xs, x_arr, side="right") - 1
        inner = (idx >= 0) & (idx < xs.size - 1)
        k = np.clip(idx, 0, xs.size - 2)
        width = self._seg_width[k]
        safe = np.where(width > 0, width, 1.0)
        frac = np.where(width > 0, np.clip(x_arr - xs[k], 0.0, width) / safe, 1.0)
        val = ps[k] + frac * self._seg_mass[k]
        out = np.where(inner, val, np.where(idx < 0, 0.0, 1.0))
        return _like(x, out)

    def inv_cdf(self, p):
        """Left-continuous generalized inverse ``inf{x >= 0 : F(x) >= p}``."""
        p_arr = np.asarray(p, dtype=float)
        if np.any((p_arr < 0) | (p_arr > 1)) or np.any(np.isnan(p_arr)):
            raise ValueError("probability must lie in [0, 1]")
        xs, ps = self.xs, self.ps
        j = np.clip(np.searchsorted(ps, p_arr, side="left"), 1, ps.size - 1)
        mass = self._seg_mass[j - 1]
        safe = np.where(mass > 0, mass, 1.0)
        frac = np.where(mass > 0, (p_arr - ps[j - 1]) / safe, 1.0)
        val = xs[j - 1] + np.clip(frac, 0.0, 1.0) * self._seg_width[j - 1]
        # F(x) >= 0 already holds at x = 0.
        out = np.where(p_arr <= 0, 0.0, val)
        return _like(p, out)

    def mean(self) -> float:
        return float(self._cum_moment[-1])

    def truncated_first_moment(self, q):
        """``E[X 1{X <= q}]`` for ``q`` inside ``[0, support_max]``."""
        q_arr = np.asarray(q, dtype=float)
        if np.any(q_arr < -_TOL) or np.any(q_arr > self.support_max + _TOL):
            raise ValueError("truncation point outside the support")
        xs = self.xs
        # Segments fully at or below q contribute their whole moment.
        full = np.searchsorted(xs, q_arr, side="right") - 1
        full = np.clip(full, 0, xs.size - 1)
        out = self._cum_moment[full]
        k = np.clip(full, 0, xs.size - 2)
        width = self._seg_width[k]
        partial = (full < xs.size - 1) & (width > 0)
        a = xs[k]
        u = np.clip(q_arr, a, xs[k + 1])
        dens = np.where(width > 0, self._seg_mass[k] / np.where(width > 0, width, 1.0), 0.0)
        out = out + np.where(partial, 0.5 * dens * (u * u - a * a), 0.0)
        return _like(q, out)

    def expected_shortfall(self, x):
        """``E[(x - X)^+]``, the integral of the CDF from 0 to ``x``."""
        x_arr = np.asarray(x, dtype=float)
        xs, ps = self.xs, self.ps
        idx = np.searchsorted(xs, x_arr, side="right") - 1
        k = np.clip(idx, 0, xs.size - 2)
        width = self._seg_width[k]
        d = np.clip(x_arr - xs[k], 0.0, width)
        slope = np.where(width > 0, self._seg_mass[k] / np.where(width > 0, width, 1.0), 0.0)
        inside = self._cum_area[k] + d * ps[k] + 0.5 * slope * d * d
        beyond = self._cum_area[-1] + (x_arr - xs[-1])
        out = np.where(idx < 0, 0.0, np.where(idx >= xs.size - 1, beyond, inside))
        return _like(x, out)


def _like(template, values: np.ndarray):
    if np.ndim(template) == 0:
        return float(values)
    return values


# -- constructors ----------------------------------------------------------


def from_knots(xs: Sequence[float], ps: Sequence[float]) -> GenerationDistribution:
    return GenerationDistribution(np.asarray(xs, dtype=float), np.asarray(ps, dtype=float))


def uniform(low: float, high: float) -> GenerationDistribution:
    if not 0 <= low < high:
        raise ConfigError(f"uniform support must satisfy 0 <= low < high, got [{low}, {high}]")
    return from_knots([low, high], [0.0, 1.0])


def point_mass(value: float) -> GenerationDistribution:
    if value < 0:
        raise ConfigError("point mass location must be nonnegative")
    return from_knots([value, value], [0.0, 1.0])


def build_ecdf(samples: Iterable[float]) -> GenerationDistribution:
    """Linear interpolation of the empirical CDF between order statistics.

    The k-th smallest of n samples sits at probability (k-1)/(n-1), so the
    CDF is 0 at the smallest sample and 1 at the largest. Tied samples give
    repeated knots, i.e. a jump. A single sample or all-equal samples give a
    point mass.
    """
    arr = np.sort(np.asarray(list(samples), dtype=float))
    if arr.size == 0:
        raise ConfigError("cannot build a distribution from an empty sample")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("samples must be finite")
    if arr[0] < 0:
        raise ConfigError(f"samples must be nonnegative, found {arr[0]}")
    if arr[-1] - arr[0] <= _TOL:
        return point_mass(float(arr[0]))
    return from_knots(arr, np.linspace(0.0, 1.0, arr.size))


# Module-level aliases matching the functional API used by the solvers.


def cdf(dist: GenerationDistribution, x):
    return dist.cdf(x)


def inv_cdf(dist: GenerationDistribution, p):
    return dist.inv_cdf(p)


def mean(dist: GenerationDistribution) -> float:
    return dist.mean()


def truncated_first_moment(dist: GenerationDistribution, q):
    return dist.truncated_first_moment(q)


def expected_shortfall(dist: GenerationDistribution, x):
    return dist.expected_shortfall(x)

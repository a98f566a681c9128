"""Storage capacity from exponential-moment tail bounds, and its hourly cost.

A supplier with storage sells its mean output every hour, so the storage
absorbs ``CD = X - E[X]`` each hour. Over a day the energy level drifts by
the partial sums of ``CD``. The capacity on each side is the smallest grid
value for which a Chernoff-type bound on the probability of leaving the
band, averaged over months, is at most ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import ConfigError, SolverError

Side = Literal["underflow", "overflow"]
S_MAX = 50.0


@dataclass(frozen=True)
class ChargeDischargeSeries:
    """Daily charge/discharge trajectories per month.

    ``by_month[m]`` has shape ``(days, hours)``; row ``d`` is day ``d``'s
    hourly net flow into storage.
    """

    by_month: Mapping[int, np.ndarray]

    @property
    def months(self) -> list[int]:
        return sorted(self.by_month)

    @property
    def hours(self) -> int:
        return int(next(iter(self.by_month.values())).shape[1])

    def max_abs(self) -> float:
        return max(float(np.abs(v).max()) for v in self.by_month.values())

    def max_abs_partial_sum(self) -> float:
        return max(float(np.abs(np.cumsum(v, axis=1)).max()) for v in self.by_month.values())


@dataclass(frozen=True)
class CapacityResult:
    underflow_capacity: float
    overflow_capacity: float
    total: float
    achieved_bounds: tuple[float, float]
    probability_target: float
    step: float


@dataclass(frozen=True)
class StorageCostParams:
    unit_capacity_cost: float
    interest_rate: float
    lifetime_years: int
    hours_per_year: float = 8760.0
    degradation_unit_cost: float = 0.0
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.unit_capacity_cost < 0 or self.degradation_unit_cost < 0:
            raise ConfigError("storage costs must be nonnegative")
        if not 0 <= self.interest_rate <= 1:
            raise ConfigError("interest rate must lie in [0, 1]")
        if self.lifetime_years < 1:
            raise ConfigError("lifetime must be at least one year")
        if self.hours_per_year <= 0:
            raise ConfigError("hours_per_year must be positive")
        for eff in (self.charge_efficiency, self.discharge_efficiency):
            if not 0 < eff <= 1:
                raise ConfigError("efficiencies must lie in (0, 1]")


def charge_discharge_series(
    samples: Mapping[tuple[int, int], Sequence[float]],
    charge_efficiency: float = 1.0,
    discharge_efficiency: float = 1.0,
) -> ChargeDischargeSeries:
    """Deviations from each (month, hour) mean, arranged as daily trajectories.

    The k-th sample of every hour in a month belongs to day k, so all hours
    of a month need the same number of samples. With efficiencies below one
    the flow into storage is ``eta_c * CD^+ - CD^- / eta_d``.
    """
    for eff in (charge_efficiency, discharge_efficiency):
        if not 0 < eff <= 1:
            raise ConfigError("efficiencies must lie in (0, 1]")
    if not samples:
        raise ConfigError("no samples")
    months = sorted({m for m, _ in samples})
    hours = sorted({t for _, t in samples})
    out = {}
    for m in months:
        rows = []
        for t in hours:
            vals = samples.get((m, t))
            if vals is None or len(vals) == 0:
                raise ConfigError(f"month {m} has no samples for hour {t}")
            rows.append(np.asarray(vals, dtype=float))
        counts = {r.size for r in rows}
        if len(counts) != 1:
            raise ConfigError(f"month {m} has incomplete days: per-hour sample counts {sorted(counts)}")
        x = np.stack(rows, axis=1)
        cd = x - x.mean(axis=0, keepdims=True)
        if charge_efficiency != 1.0 or discharge_efficiency != 1.0:
            cd = charge_efficiency * np.maximum(cd, 0.0) - np.maximum(-cd, 0.0) / discharge_efficiency
        out[m] = cd
    return ChargeDischargeSeries(out)


def _min_log_bound(z: np.ndarray, capacity: float) -> float:
    """``min over s in (0, S_MAX] of log(exp(-s*capacity) * mean(exp(s*z)))``."""
    log_n = math.log(z.size)

    def f(s: float) -> float:
        return -s * capacity + float(logsumexp(s * z)) - log_n

    def derivs(s: float) -> tuple[float, float]:
        w = np.exp(s * z - logsumexp(s * z))
        m1 = float(w @ z)
        return m1 - capacity, float(w @ (z - m1) ** 2)

    # f is convex with f(0) = 0, so the slope at 0 decides whether s -> 0 wins.
    if float(z.mean()) >= capacity:
        return 0.0
    d_max, _ = derivs(S_MAX)
    if d_max <= 0:
        return min(f(S_MAX), 0.0)
    s = 1.0
    for _ in range(60):
        d1, d2 = derivs(s)
        if d2 <= 1e-300:
            break
        nxt = min(max(s - d1 / d2, 0.5 * s), min(2.0 * s, S_MAX))
        if abs(nxt - s) <= 1e-12 * max(1.0, s):
            return min(f(nxt), 0.0)
        s = nxt
    res = minimize_scalar(f, bounds=(1e-12, S_MAX), method="bounded", options={"xatol": 1e-10})
    return min(float(res.fun), f(S_MAX), 0.0)


def chernoff_bound(trajectories: np.ndarray, capacity: float, side: Side) -> float:
    """Upper bound on the worst-hour probability of leaving one side of the band.

    ``trajectories`` is one month's ``(days, hours)`` array. For overflow the
    partial sums must stay below ``capacity``; for underflow they must stay
    above ``-capacity``.
    """
    if capacity <= 0:
        raise ConfigError("capacity must be positive")
    if side not in ("underflow", "overflow"):
        raise ConfigError(f"unknown side {side!r}")
    partial = np.cumsum(np.asarray(trajectories, dtype=float), axis=1)
    if side == "underflow":
        partial = -partial
    worst = max(_min_log_bound(partial[:, t], capacity) for t in range(partial.shape[1]))
    return float(min(math.exp(worst), 1.0))


def month_averaged_bound(
    cd: ChargeDischargeSeries, capacity: float, side: Side, month_weights: Mapping[int, float] | None = None
) -> float:
    months = cd.months
    w = month_weights or {m: 1.0 / len(months) for m in months}
    return float(sum(w[m] * chernoff_bound(cd.by_month[m], capacity, side) for m in months))


def default_step(cd: ChargeDischargeSeries) -> float:
    """One percent of the largest absolute daily partial sum."""
    span = cd.max_abs_partial_sum()
    if span <= 0:
        raise ConfigError("flat charge/discharge series; pass an explicit step")
    return 0.01 * span


def size_capacity(
    cd: ChargeDischargeSeries,
    alpha: float,
    step: float | None = None,
    month_weights: Mapping[int, float] | None = None,
) -> CapacityResult:
    """Smallest multiples of ``step`` meeting the probability target on each side."""
    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    step = default_step(cd) if step is None else step
    if step <= 0:
        raise ConfigError("step must be positive")
    # Past the largest possible partial sum the bound decays like exp(-S_MAX * gap).
    limit = cd.hours * cd.max_abs() + math.log(1.0 / alpha) / S_MAX + step
    k_max = max(1, math.floor(limit / step))
    caps, bounds = [], []
    for side in ("underflow", "overflow"):
        cache: dict[int, float] = {}

        def bound(k: int) -> float:
            if k not in cache:
                cache[k] = month_averaged_bound(cd, k * step, side, month_weights)
            return cache[k]

        # The bound is nonincreasing in capacity, so doubling then bisecting
        # finds the same grid point as stepping up one step at a time.
        lo, hi = 0, 1
        while bound(hi) > alpha:
            if hi >= k_max:
                raise SolverError(f"{side} capacity search passed {limit:.6g} without meeting alpha")
            lo, hi = hi, min(2 * hi, k_max)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if bound(mid) <= alpha:
                hi = mid
            else:
                lo = mid
        caps.append(hi * step)
        bounds.append(bound(hi))
    return CapacityResult(caps[0], caps[1], caps[0] + caps[1], (bounds[0], bounds[1]), alpha, step)


def annuity_factor(params: StorageCostParams) -> float:
    """Share of the capital cost charged per hour over the storage lifetime."""
    r, y = params.interest_rate, params.lifetime_years
    if r == 0:
        per_year = 1.0 / y
    else:
        per_year = r / -math.expm1(-y * math.log1p(r))
    return per_year / params.hours_per_year


def degradation_cost(
    cd: ChargeDischargeSeries, unit_cost: float, month_weights: Mapping[int, float] | None = None
) -> float:
    """Expected hourly throughput cost ``unit_cost * E|CD|``."""
    if unit_cost < 0:
        raise ConfigError("unit cost must be nonnegative")
    months = cd.months
    w = month_weights or {m: 1.0 / len(months) for m in months}
    return unit_cost * float(sum(w[m] * np.abs(cd.by_month[m]).mean() for m in months))


def storage_cost(capacity: float, params: StorageCostParams, degradation: float = 0.0) -> float:
    """Hourly storage cost: annualized capital cost plus optional degradation."""
    if capacity < 0:
        raise ConfigError("capacity must be nonnegative")
    return params.unit_capacity_cost * annuity_factor(params) * capacity + degradation

"""Independent reference computations used by the tests.

Each helper takes a different route from the library code it checks:
brute-force enumeration, numerical quadrature, or direct simulation.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.integrate import quad


def ecdf_value(samples, x: float) -> float:
    """Interpolated empirical CDF by walking the sorted samples."""
    s = sorted(samples)
    n = len(s)
    if x < s[0]:
        return 0.0
    if x >= s[-1]:
        return 1.0
    # Last order statistic at or below x, counting ties.
    k = max(i for i in range(n) if s[i] <= x)
    lo, hi = s[k], s[k + 1]
    return (k + (x - lo) / (hi - lo)) / (n - 1)


def truncated_moment_quad(dist, q: float) -> float:
    """``E[X 1{X <= q}]`` via integration by parts, ``q F(q) - int_0^q F``."""
    if q <= 0:
        return 0.0
    area, _ = quad(lambda u: dist.cdf(u), 0.0, q, points=list(dist.xs[dist.xs < q]), limit=500)
    return q * dist.cdf(q) - area


def shortfall_quad(dist, x: float) -> float:
    if x <= 0:
        return 0.0
    val, _ = quad(lambda u: dist.cdf(u), 0.0, x, points=list(dist.xs[dist.xs < x]), limit=500)
    return val


def allocation_vertex_oracle(prices, quantities, demand):
    """Cheapest purchase by enumerating vertices of the feasible polytope.

    Feasible set: ``0 <= x_i <= y_i`` and ``sum x = min(D, sum y)``. Every
    vertex has all but at most one coordinate at a bound. Returns the list of
    optimal vertices so callers can inspect ties.
    """
    n = len(prices)
    target = min(demand, sum(quantities))
    best, argbest = np.inf, []
    for free in range(n):
        for bounds in itertools.product((0, 1), repeat=n - 1):
            x = np.zeros(n)
            others = [i for i in range(n) if i != free]
            for i, b in zip(others, bounds):
                x[i] = quantities[i] * b
            x[free] = target - x[others].sum()
            if x[free] < -1e-12 or x[free] > quantities[free] + 1e-12:
                continue
            cost = float(np.dot(prices, x))
            if cost < best - 1e-12:
                best, argbest = cost, [x]
            elif abs(cost - best) <= 1e-12:
                argbest.append(x)
    return best, argbest


def grid_mixture_mean(prices, masses) -> float:
    return float(np.dot(prices, masses))

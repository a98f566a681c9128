"""One market hour: scenario data, consumer allocation, bidding quantities, revenue.

Consumers buy from the cheapest supplier first. Equal prices are resolved by
trying every saturation order among the tied suppliers, keeping the orders
that maximize the tied group's total revenue, and averaging the resulting
allocations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .distributions import GenerationDistribution
from .errors import ConfigError

TOL = 1e-12

RevenueFn = Callable[[float], float]


@dataclass(frozen=True)
class SupplierSpec:
    """A supplier's storage decision and generation distribution for one cell."""

    id: int
    invests: bool
    dist: GenerationDistribution
    allow_point_mass: bool = False

    def __post_init__(self) -> None:
        if self.dist.is_point_mass and not self.allow_point_mass:
            raise ConfigError(
                f"supplier {self.id} has a point-mass distribution; pass allow_point_mass=True"
            )

    def quantity(self, price, penalty: float):
        return dominant_quantity(price, self.invests, self.dist, penalty)

    def revenue(self, price, sold, penalty: float):
        return supplier_revenue(price, sold, self.invests, self.dist, penalty)


@dataclass(frozen=True)
class MarketScenario:
    """Market constants and suppliers for one (month, hour) cell."""

    price_cap: float
    penalty: float
    demand: float
    suppliers: tuple[SupplierSpec, ...]
    grid_price: float = math.inf

    def __post_init__(self) -> None:
        object.__setattr__(self, "suppliers", tuple(self.suppliers))
        if not self.price_cap > 0:
            raise ConfigError(f"price cap must be positive, got {self.price_cap}")
        if not self.price_cap < self.grid_price:
            raise ConfigError("price cap must be below the grid price")
        if not self.penalty > self.price_cap:
            raise ConfigError("penalty must exceed the price cap")
        if not (self.demand > 0 and math.isfinite(self.demand)):
            raise ConfigError(f"demand must be positive and finite, got {self.demand}")
        if len(self.suppliers) < 2:
            raise ConfigError("a market needs at least two suppliers")

    @property
    def n_suppliers(self) -> int:
        return len(self.suppliers)

    @property
    def profile(self) -> tuple[int, ...]:
        return tuple(int(s.invests) for s in self.suppliers)

    def with_profile(self, profile: Sequence[int | bool]) -> "MarketScenario":
        if len(profile) != self.n_suppliers:
            raise ConfigError("profile length does not match the number of suppliers")
        sups = tuple(replace(s, invests=bool(f)) for s, f in zip(self.suppliers, profile))
        return replace(self, suppliers=sups)

    def with_demand(self, demand: float) -> "MarketScenario":
        return replace(self, demand=demand)

    def cap_quantities(self) -> np.ndarray:
        """Dominant quantities when bidding at the cap."""
        return np.array([s.quantity(self.price_cap, self.penalty) for s in self.suppliers])


@dataclass(frozen=True)
class Bid:
    price: float
    quantity: float

    def __post_init__(self) -> None:
        if self.price < 0 or self.quantity < 0:
            raise ConfigError(f"bid price and quantity must be nonnegative, got {self}")


@dataclass(frozen=True)
class Allocation:
    purchased: tuple[float, ...] = field(default_factory=tuple)

    @property
    def total(self) -> float:
        return float(sum(self.purchased))


def _saturate(order: Sequence[int], quantities: Sequence[float], remaining: float) -> dict[int, float]:
    out = {}
    for i in order:
        take = min(quantities[i], max(remaining, 0.0))
        out[i] = take
        remaining -= take
    return out


def allocate_demand(
    bids: Sequence[Bid],
    demand: float,
    revenues: Sequence[RevenueFn] | None = None,
) -> Allocation:
    """Cost-minimizing purchase of ``demand`` from the given bids.

    ``revenues`` optionally maps each supplier's sold quantity to its revenue
    and is only consulted to break price ties. Without it every saturation
    order within a tie counts as revenue-maximizing and the allocation is the
    plain average over orders.
    """
    if demand <= 0:
        raise ConfigError("demand must be positive")
    n = len(bids)
    x = [0.0] * n
    order = sorted(range(n), key=lambda i: bids[i].price)
    quantities = [b.quantity for b in bids]
    remaining = float(demand)
    pos = 0
    while pos < n:
        group = [order[pos]]
        while pos + len(group) < n and abs(bids[order[pos + len(group)]].price - bids[group[0]].price) <= TOL:
            group.append(order[pos + len(group)])
        pos += len(group)
        if len(group) == 1:
            i = group[0]
            x[i] = min(quantities[i], max(remaining, 0.0))
        else:
            candidates = [_saturate(perm, quantities, remaining) for perm in itertools.permutations(group)]
            if revenues is not None:
                totals = [sum(revenues[i](c[i]) for i in group) for c in candidates]
                best = max(totals)
                candidates = [
                    c for c, t in zip(candidates, totals) if math.isclose(t, best, rel_tol=1e-12, abs_tol=1e-12)
                ]
            for i in group:
                x[i] = sum(c[i] for c in candidates) / len(candidates)
        remaining -= sum(x[i] for i in group)
    return Allocation(tuple(x))


def dominant_quantity(price, invests: bool, dist: GenerationDistribution, penalty: float):
    """Revenue-maximizing bid quantity at ``price``, whatever the rivals bid."""
    if invests:
        if np.ndim(price) == 0:
            return dist.mean()
        return np.full(np.shape(price), dist.mean())
    ratio = np.asarray(price, dtype=float) / penalty
    if np.any(ratio < 0) or np.any(ratio > 1):
        raise ValueError("price must lie in [0, penalty]")
    return dist.inv_cdf(ratio if np.ndim(price) else float(ratio))


def supplier_revenue(price, sold, invests: bool, dist: GenerationDistribution, penalty: float):
    """Expected revenue from selling ``sold`` at ``price`` net of shortfall penalties."""
    p = np.asarray(price, dtype=float)
    x = np.asarray(sold, dtype=float)
    if np.any(x < -TOL):
        raise ValueError("sold quantity must be nonnegative")
    x = np.maximum(x, 0.0)
    if invests:
        out = p * x - penalty * np.maximum(x - dist.mean(), 0.0)
    else:
        out = p * x - penalty * np.asarray(dist.expected_shortfall(x))
    if np.ndim(out) == 0:
        return float(out)
    return out

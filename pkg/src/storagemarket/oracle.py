"""Brute-force checks on a discretized price game.

The price interval ``[0, price_cap]`` is replaced by an even grid and every
joint grid bid is evaluated with the market primitives. On that finite game
we can scan best responses, certify epsilon-Nash mixtures, and compute a
grid equilibrium with linear programming. None of this uses the analytic
equilibrium formulas, which is what makes it useful as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import ConfigError, SolverError
from .market import Bid, MarketScenario, allocate_demand

ORIENTATIONS = ("relaxed", "none", "atom_first", "atom_second")


@dataclass(frozen=True)
class DiscreteGame:
    """Two-supplier bimatrix game on a common price grid.

    ``payoff[i][a, b]`` is supplier ``i``'s revenue when it bids grid price
    ``a`` and its rival bids grid price ``b``.
    """

    price_grid: np.ndarray
    payoff: np.ndarray
    demand: float
    price_cap: float

    @property
    def size(self) -> int:
        return int(self.price_grid.size)

    def default_epsilon(self) -> float:
        return 1e-3 * self.price_cap * self.demand


@dataclass(frozen=True)
class NashCheck:
    passed: bool
    gain: float
    gains: tuple[float, float]
    values: tuple[float, float]


@dataclass(frozen=True)
class GridEquilibrium:
    """Mixed strategies on the grid found by :func:`solve_grid_equilibrium`."""

    strategies: tuple[np.ndarray, np.ndarray]
    values: tuple[float, float]
    gain: float
    lower_index: int
    lower_price: float
    orientation: str


def price_grid(price_cap: float, price_step: float) -> np.ndarray:
    """Even grid ``0, step, ..., price_cap``; the step must divide the cap."""
    if price_step <= 0:
        raise ConfigError("price step must be positive")
    ratio = price_cap / price_step
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ConfigError(f"price step {price_step} does not divide the cap {price_cap}")
    return np.linspace(0.0, price_cap, n + 1)


def build_discrete_game(scenario: MarketScenario, price_step: float) -> DiscreteGame:
    """Tabulate both suppliers' revenues over every pair of grid prices.

    Cells with distinct prices use strict merit order (cheaper supplier
    first), which is what :func:`allocate_demand` returns for them; equal
    price cells go through :func:`allocate_demand` so its tie rule applies.
    """
    if scenario.n_suppliers != 2:
        raise ConfigError("the discrete game covers duopolies only")
    grid = price_grid(scenario.price_cap, price_step)
    s1, s2 = scenario.suppliers
    lam, dem = scenario.penalty, scenario.demand
    y1 = np.asarray(s1.quantity(grid, lam), dtype=float)
    y2 = np.asarray(s2.quantity(grid, lam), dtype=float)

    # Off-diagonal sales: rows index supplier 1's price, columns supplier 2's.
    a_cheaper = grid[:, None] < grid[None, :]
    first1 = np.minimum(dem, y1)[:, None] * np.ones_like(grid)[None, :]
    rest1 = np.minimum(np.maximum(dem - y2[None, :], 0.0), y1[:, None])
    x1 = np.where(a_cheaper, first1, rest1)
    first2 = np.minimum(dem, y2)[None, :] * np.ones_like(grid)[:, None]
    rest2 = np.minimum(np.maximum(dem - y1[:, None], 0.0), y2[None, :])
    x2 = np.where(a_cheaper, rest2, first2)

    for a, p in enumerate(grid):
        bids = [Bid(float(p), float(y1[a])), Bid(float(p), float(y2[a]))]
        fns = [
            lambda x, p=float(p): s1.revenue(p, x, lam),
            lambda x, p=float(p): s2.revenue(p, x, lam),
        ]
        alloc = allocate_demand(bids, dem, fns)
        x1[a, a], x2[a, a] = alloc.purchased

    r1 = s1.revenue(grid[:, None] * np.ones_like(x1), x1, lam)
    r2 = s2.revenue(grid[None, :] * np.ones_like(x2), x2, lam)
    payoff = np.stack([r1, r2.T])
    if not np.all(np.isfinite(payoff)):
        raise SolverError("non-finite payoff in discrete game")
    return DiscreteGame(grid, payoff, dem, scenario.price_cap)


def _check_mixture(sigma: np.ndarray, n: int) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (n,):
        raise ConfigError(f"strategy must have length {n}")
    if np.any(sigma < -1e-12) or abs(sigma.sum() - 1.0) > 1e-9:
        raise ConfigError("strategy must be a probability vector")
    return sigma


def best_response_scan(game: DiscreteGame, player: int, opponent_mixture) -> tuple[int, float, float]:
    """Best grid price against a fixed rival mixture.

    Returns ``(index, price, expected payoff)``. Near-ties (1e-12 relative)
    resolve to the lowest price.
    """
    sigma = _check_mixture(opponent_mixture, game.size)
    values = game.payoff[player] @ sigma
    best = values.max()
    idx = int(np.flatnonzero(values >= best - 1e-12 * max(1.0, abs(best)))[0])
    return idx, float(game.price_grid[idx]), float(values[idx])


def epsilon_nash_check(game: DiscreteGame, strategies: Sequence, epsilon: float | None = None) -> NashCheck:
    """Largest gain any supplier can get from a pure grid deviation."""
    s1 = _check_mixture(strategies[0], game.size)
    s2 = _check_mixture(strategies[1], game.size)
    eps = game.default_epsilon() if epsilon is None else epsilon
    v1 = float(s1 @ game.payoff[0] @ s2)
    v2 = float(s2 @ game.payoff[1] @ s1)
    g1 = max(float((game.payoff[0] @ s2).max()) - v1, 0.0)
    g2 = max(float((game.payoff[1] @ s1).max()) - v2, 0.0)
    gain = max(g1, g2)
    return NashCheck(gain <= eps, gain, (g1, g2), (v1, v2))


def indifference_lp(
    own_payoff: np.ndarray, lower: int, own_top: bool, opp_top: bool
) -> tuple[float, np.ndarray]:
    """Rival mixture on ``[lower, top]`` that best equalizes one supplier's payoffs.

    Minimizes ``t`` subject to every grid price earning at most ``v + t`` and
    every price in the supplier's own support earning at least ``v - t``.
    The ``*_top`` flags say whether the cap itself is inside each support.
    The mixture is parametrized by its cumulative sums, which keeps the
    constraint matrix sparse because payoffs do not depend on the rival's
    price once the rival is the more expensive one.
    """
    n = own_payoff.shape[0]
    support = np.arange(lower, n if opp_top else n - 1)
    own = np.arange(lower, n if own_top else n - 1)
    k = support.size
    if k == 0 or own.size == 0:
        raise SolverError("empty support in indifference LP")
    a = own_payoff[:, support]
    last = a[:, -1]
    diff = a[:, :-1] - a[:, 1:]
    m = k - 1
    ones_all = np.ones((n, 1))
    ones_own = np.ones((own.size, 1))
    upper = sparse.hstack([sparse.csr_matrix(diff), -ones_all, -ones_all])
    lower_rows = sparse.hstack([sparse.csr_matrix(-diff[own]), ones_own, -ones_own])
    blocks = [upper, lower_rows]
    rhs = [-last, last[own]]
    if m > 1:
        mono = sparse.diags([np.ones(m - 1), -np.ones(m - 1)], [0, 1], shape=(m - 1, m))
        blocks.append(sparse.hstack([mono, sparse.csr_matrix((m - 1, 2))]))
        rhs.append(np.zeros(m - 1))
    a_ub = sparse.vstack(blocks).tocsr()
    b_ub = np.concatenate(rhs)
    c = np.zeros(m + 2)
    c[-1] = 1.0
    bounds = [(0.0, 1.0)] * m + [(None, None), (0.0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError(f"indifference LP failed: {res.message}")
    cum = np.concatenate(([0.0], res.x[:m], [1.0]))
    sigma = np.zeros(n)
    sigma[support] = np.maximum(np.diff(cum), 0.0)
    sigma /= sigma.sum()
    return float(res.x[-1]), sigma


def _orientation_flags(orientation: str) -> tuple[tuple[bool, bool], tuple[bool, bool]]:
    # (own_top, opp_top) for the LP equalizing supplier 1, then supplier 2.
    return {
        "relaxed": ((False, True), (False, True)),
        "none": ((False, False), (False, False)),
        "atom_first": ((True, False), (False, True)),
        "atom_second": ((False, True), (True, False)),
    }[orientation]


def _solve_pair(game: DiscreteGame, lower: int, orientation: str):
    f1, f2 = _orientation_flags(orientation)
    t_first, sigma2 = indifference_lp(game.payoff[0], lower, *f1)
    t_second, sigma1 = indifference_lp(game.payoff[1], lower, *f2)
    return max(t_first, t_second), sigma1, sigma2


def solve_grid_equilibrium(
    game: DiscreteGame,
    lower_range: tuple[int, int] | None = None,
    epsilon: float | None = None,
) -> GridEquilibrium:
    """Approximate mixed equilibrium of the grid game.

    Both suppliers share a lower support index. For each index the relaxed
    LP pair gives a residual ``t`` and a candidate profile with a true
    deviation gain; the search minimizes their sum, first by ternary search
    and, if that lands above ``epsilon``, by a coarse scan with local
    refinement. Around the chosen index every choice of which supplier (if
    any) keeps the cap in its support is re-solved and the profile with the
    smallest gain wins. The result is not certified here; callers pass it
    to :func:`epsilon_nash_check`.
    """
    n = game.size
    lo, hi = (0, n - 2) if lower_range is None else lower_range
    lo, hi = max(lo, 0), min(hi, n - 2)
    if lo > hi:
        raise SolverError("empty lower-support search range")
    eps = game.default_epsilon() if epsilon is None else epsilon
    cache: dict[int, float] = {}

    def score(k: int) -> float:
        if k not in cache:
            try:
                t, sigma1, sigma2 = _solve_pair(game, k, "relaxed")
                cache[k] = t + epsilon_nash_check(game, (sigma1, sigma2)).gain
            except SolverError:
                cache[k] = math.inf
        return cache[k]

    def refine(centers) -> GridEquilibrium | None:
        best: GridEquilibrium | None = None
        for k in sorted({j for c in centers for j in range(c - 1, c + 2) if lo <= j <= hi}):
            for orientation in ORIENTATIONS:
                try:
                    _, sigma1, sigma2 = _solve_pair(game, k, orientation)
                except SolverError:
                    continue
                check = epsilon_nash_check(game, (sigma1, sigma2))
                if best is None or check.gain < best.gain:
                    best = GridEquilibrium(
                        (sigma1, sigma2), check.values, check.gain, k, float(game.price_grid[k]), orientation
                    )
        return best

    a, b = lo, hi
    while b - a > 2:
        m1 = a + (b - a) // 3
        m2 = b - (b - a) // 3
        if score(m1) <= score(m2):
            b = m2
        else:
            a = m1
    best = refine([min(range(a, b + 1), key=score)])

    if best is None or best.gain > eps:
        stride = max(1, (hi - lo) // 16)
        coarse = sorted(range(lo, hi + 1, stride), key=score)[:2]
        local = [min(range(max(lo, c - stride), min(hi, c + stride) + 1), key=score) for c in coarse]
        alt = refine(local)
        if alt is not None and (best is None or alt.gain < best.gain):
            best = alt
    if best is None:
        raise SolverError("no grid equilibrium candidate could be solved")
    return best


def profile_payoffs(scenario: MarketScenario, prices: Sequence[float]) -> np.ndarray:
    """Revenues of all suppliers at a pure price profile with dominant quantities."""
    lam = scenario.penalty
    sups = scenario.suppliers
    qty = [float(s.quantity(p, lam)) for s, p in zip(sups, prices)]
    fns = [lambda x, s=s, p=p: s.revenue(p, x, lam) for s, p in zip(sups, prices)]
    alloc = allocate_demand([Bid(float(p), q) for p, q in zip(prices, qty)], scenario.demand, fns)
    return np.array([fns[i](alloc.purchased[i]) for i in range(len(sups))])


def pure_deviation_gain(scenario: MarketScenario, prices: Sequence[float], price_step: float) -> float:
    """Largest unilateral gain from moving one supplier to another grid price.

    Works for any number of suppliers.
    """
    grid = price_grid(scenario.price_cap, price_step)
    base = profile_payoffs(scenario, prices)
    worst = 0.0
    for i in range(scenario.n_suppliers):
        for p in grid:
            trial = list(prices)
            trial[i] = float(p)
            worst = max(worst, float(profile_payoffs(scenario, trial)[i] - base[i]))
    return worst

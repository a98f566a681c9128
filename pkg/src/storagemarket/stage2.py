"""Price competition between suppliers that bid their dominant quantities.

Each solver returns a :class:`PriceEquilibrium`. A pure equilibrium has both
suppliers at the cap or both at zero. Otherwise the suppliers randomize over
a common interval ``[l, price_cap]`` and at most one of them keeps an atom at
the cap. The three duopoly subgames are handled as follows:

* both invest: closed-form revenues and CDFs;
* one invests: the lower support is found by bisection and the CDFs are
  analytic, with the required integral evaluated in closed form per piece;
* neither invests: the game is discretized on a price grid and solved
  there, with an epsilon-Nash certificate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from . import oracle
from .errors import RegimeError, SolverError
from .market import TOL, Bid, MarketScenario, SupplierSpec, allocate_demand

_QUAD_EPSABS = 1e-10
_QUAD_LIMIT = 200
_HUGE = 1e300
DEFAULT_REFINEMENTS = 2


class Regime(str, enum.Enum):
    PURE_CAP = "PureCap"
    PURE_ZERO = "PureZero"
    MIXED = "Mixed"


# -- mixed price distributions ----------------------------------------------


class MixedPriceCdf:
    """Distribution of one supplier's bid price on ``[lower, upper]``.

    Subclasses provide the continuous part and/or grid masses; ``atom`` is
    the probability of bidding exactly ``upper``.
    """

    lower: float
    upper: float
    atom: float

    def cdf(self, p: float) -> float:
        raise NotImplementedError

    def prob_below(self, p: float) -> float:
        raise NotImplementedError

    def prob_at(self, p: float) -> float:
        raise NotImplementedError

    def integrate_below(self, h: Callable[[float], float], p: float) -> float:
        """``E[h(S) 1{S < p}]`` for the bid price ``S``.

        ``h`` must accept a numpy array of prices as well as a float.
        """
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class AnalyticPriceCdf(MixedPriceCdf):
    """Continuous CDF on ``[lower, upper)`` plus an optional atom at ``upper``.

    ``cdf_fn`` and ``density_fn`` are only called inside ``[lower, upper)``.
    ``breakpoints`` lists interior kinks of the density, used to split
    quadrature.
    """

    lower: float
    upper: float
    atom: float
    cdf_fn: Callable[[float], float] = field(repr=False)
    density_fn: Callable[[float], float] = field(repr=False)
    breakpoints: tuple[float, ...] = ()

    def cdf(self, p: float) -> float:
        if p < self.lower:
            return 0.0
        if p >= self.upper:
            return 1.0
        return min(max(float(self.cdf_fn(p)), 0.0), 1.0)

    def prob_below(self, p: float) -> float:
        if p <= self.lower:
            return 0.0
        if p > self.upper:
            return 1.0
        if p == self.upper:
            return 1.0 - self.atom
        return self.cdf(p)

    def prob_at(self, p: float) -> float:
        return self.atom if abs(p - self.upper) <= TOL else 0.0

    def _points(self, hi: float) -> list[float]:
        return [b for b in self.breakpoints if self.lower < b < hi]

    def integrate_below(self, h: Callable[[float], float], p: float) -> float:
        hi = min(p, self.upper)
        if hi <= self.lower:
            return 0.0
        total, _ = quad(
            lambda s: h(s) * self.density_fn(s),
            self.lower,
            hi,
            points=self._points(hi) or None,
            epsabs=_QUAD_EPSABS,
            limit=_QUAD_LIMIT,
        )
        return float(total)

    def mean(self) -> float:
        tail, _ = quad(
            lambda s: 1.0 - self.cdf(s),
            self.lower,
            self.upper,
            points=self._points(self.upper) or None,
            epsabs=_QUAD_EPSABS,
            limit=_QUAD_LIMIT,
        )
        return self.lower + float(tail)


@dataclass(frozen=True)
class GridPriceCdf(MixedPriceCdf):
    """Discrete distribution on grid prices."""

    prices: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        prices = np.asarray(self.prices, dtype=float)
        masses = np.clip(np.asarray(self.masses, dtype=float), 0.0, None)
        if prices.shape != masses.shape or masses.sum() <= 0:
            raise SolverError("grid CDF needs matching prices and positive total mass")
        masses = masses / masses.sum()
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "masses", masses)

    @property
    def lower(self) -> float:
        return float(self.prices[np.flatnonzero(self.masses > 1e-12)[0]])

    @property
    def upper(self) -> float:
        return float(self.prices[-1])

    @property
    def atom(self) -> float:
        return float(self.masses[-1])

    def cdf(self, p: float) -> float:
        return float(self.masses[self.prices <= p + TOL].sum())

    def prob_below(self, p: float) -> float:
        return float(self.masses[self.prices < p - TOL].sum())

    def prob_at(self, p: float) -> float:
        return float(self.masses[np.abs(self.prices - p) <= TOL].sum())

    def integrate_below(self, h: Callable[[float], float], p: float) -> float:
        idx = np.flatnonzero((self.prices < p - TOL) & (self.masses > 0))
        if idx.size == 0:
            return 0.0
        return float(np.asarray(h(self.prices[idx]), dtype=float) @ self.masses[idx])

    def mean(self) -> float:
        return float(self.prices @ self.masses)


def pure_price(price: float) -> GridPriceCdf:
    """Degenerate mixture that always bids ``price``."""
    return GridPriceCdf(np.array([price]), np.array([1.0]))


# -- results -----------------------------------------------------------------


@dataclass(frozen=True)
class PriceEquilibrium:
    kind: Regime
    revenues: tuple[float, ...]
    prices: tuple[float, ...] | None = None
    mixed: tuple[MixedPriceCdf, ...] | None = None
    lower_support: float | None = None
    grid_values: tuple[float, ...] | None = None
    grid_gain: float | None = None

    def expected_prices(self) -> tuple[float, ...]:
        if self.mixed is not None:
            return tuple(c.mean() for c in self.mixed)
        assert self.prices is not None
        return self.prices


@dataclass(frozen=True)
class OligopolyResult:
    regime: Regime
    equilibrium: PriceEquilibrium | None
    mixed_exists: bool


# -- regimes and pure equilibria ---------------------------------------------


def classify_regime(scenario: MarketScenario) -> Regime:
    """Which kind of price equilibrium the scenario admits (any number of suppliers)."""
    y_cap = scenario.cap_quantities()
    dem = scenario.demand
    if dem >= y_cap.sum() - TOL:
        return Regime.PURE_CAP
    investors = [i for i, s in enumerate(scenario.suppliers) if s.invests]
    # With fewer than two investors the zero-price condition can never hold.
    if len(investors) >= 2:
        total = y_cap[investors].sum()
        if all(dem <= total - y_cap[j] + TOL for j in investors):
            return Regime.PURE_ZERO
    return Regime.MIXED


def floor_quantities(scenario: MarketScenario) -> np.ndarray:
    """Quantities bid just above price zero: the mean for investors, the lowest knot otherwise."""
    return np.array([s.dist.mean() if s.invests else float(s.dist.xs[0]) for s in scenario.suppliers])


def undercut_to_zero(scenario: MarketScenario) -> bool:
    """True when every supplier's rivals cover demand at every positive price.

    Prices are then undercut toward zero, where non-investors bid nothing, so
    with fewer than two investors no price equilibrium exists.
    """
    floor = floor_quantities(scenario)
    return all(floor.sum() - floor[i] >= scenario.demand - TOL for i in range(scenario.n_suppliers))


def _cap_revenue(spec: SupplierSpec, scenario: MarketScenario) -> float:
    if spec.invests:
        return scenario.price_cap * spec.dist.mean()
    # Equals penalty * E[X 1{X <= q}] when the CDF is continuous at q; the
    # revenue form also covers point masses.
    q = spec.quantity(scenario.price_cap, scenario.penalty)
    return float(spec.revenue(scenario.price_cap, q, scenario.penalty))


def pure_equilibrium(scenario: MarketScenario) -> PriceEquilibrium | None:
    regime = classify_regime(scenario)
    n = scenario.n_suppliers
    if regime is Regime.PURE_CAP:
        revenues = tuple(_cap_revenue(s, scenario) for s in scenario.suppliers)
        return PriceEquilibrium(regime, revenues, prices=(scenario.price_cap,) * n)
    if regime is Regime.PURE_ZERO:
        return PriceEquilibrium(regime, (0.0,) * n, prices=(0.0,) * n)
    return None


def oligopoly_pure_check(scenario: MarketScenario) -> OligopolyResult:
    """Pure-equilibrium classification for any number of suppliers.

    In the mixed regime no CDFs are computed; only existence is reported.
    """
    regime = classify_regime(scenario)
    return OligopolyResult(regime, pure_equilibrium(scenario), regime is Regime.MIXED)


def _require_duopoly(scenario: MarketScenario, profile: tuple[int, int]) -> None:
    if scenario.n_suppliers != 2:
        raise RegimeError("mixed duopoly solvers need exactly two suppliers")
    if tuple(sorted(scenario.profile)) != tuple(sorted(profile)):
        raise RegimeError(f"investment profile {scenario.profile} does not match this solver")
    if classify_regime(scenario) is not Regime.MIXED:
        raise RegimeError("scenario is not in the mixed regime")


# -- both suppliers invest ------------------------------------------------------


def s1s1_revenues(means: Sequence[float], demand: float, price_cap: float) -> tuple[float, float]:
    """Closed-form mixed-equilibrium revenues when both suppliers invest."""
    out = []
    for i in range(2):
        qi, qj = means[i], means[1 - i]
        if qi > qj:
            out.append(price_cap * (demand - qj))
        else:
            out.append(price_cap * (demand - qi) * qi / min(qj, demand))
    return out[0], out[1]


def s1s1_mixed(scenario: MarketScenario) -> PriceEquilibrium:
    """Mixed equilibrium when both suppliers invest.

    A supplier bidding ``p`` sells ``A = min(D, q)`` when it is cheaper and
    ``B = min((D - q_rival)^+, q)`` otherwise, so indifference at its
    equilibrium revenue pins down the rival's CDF directly.
    """
    _require_duopoly(scenario, (1, 1))
    dem, cap = scenario.demand, scenario.price_cap
    q = [s.dist.mean() for s in scenario.suppliers]
    rev = s1s1_revenues(q, dem, cap)
    low = rev[0] / min(dem, q[0])
    cdfs = []
    for i in range(2):
        j = 1 - i
        a_j = min(dem, q[j])
        b_j = min(max(dem - q[i], 0.0), q[j])
        pi_j = rev[j]

        def g(p, a=a_j, b=b_j, v=pi_j):
            return (p * a - v) / (p * (a - b))

        def dens(p, a=a_j, b=b_j, v=pi_j):
            return v / (p * p * (a - b))

        atom = max(1.0 - g(cap), 0.0)
        atom = atom if atom > 1e-12 else 0.0
        cdfs.append(AnalyticPriceCdf(low, cap, atom, g, dens))
    return PriceEquilibrium(Regime.MIXED, rev, mixed=tuple(cdfs), lower_support=low)


# -- exactly one supplier invests ---------------------------------------------


def _psi(u: float) -> float:
    """``(log1p(u) - u) / u**2`` with a series near zero."""
    if abs(u) < 1e-3:
        return -0.5 + u / 3.0 - u * u / 4.0 + u**3 / 5.0 - u**4 / 6.0
    return (math.log1p(u) - u) / (u * u)


class _OneInvestor:
    """Closed-form pieces of the one-investor equilibrium.

    ``w`` indexes the investor, ``n`` the supplier without storage, whose
    bid quantity ``y(s)`` is linear in the price ``s`` between breakpoints.
    """

    def __init__(self, scenario: MarketScenario):
        self.sc = scenario
        self.w = 0 if scenario.suppliers[0].invests else 1
        self.n = 1 - self.w
        self.inv = scenario.suppliers[self.w]
        self.non = scenario.suppliers[self.n]
        self.lam = scenario.penalty
        self.cap = scenario.price_cap
        self.dem = scenario.demand
        self.q = self.inv.dist.mean()
        self.m1 = min(self.dem, self.q)
        self.c = max(self.dem - self.q, 0.0)
        self.pieces = self._linear_pieces()

    def y(self, s: float) -> float:
        return float(self.non.quantity(s, self.lam))

    def r_non(self, s: float, x: float) -> float:
        return float(self.non.revenue(s, x, self.lam))

    def a(self, s: float) -> float:
        return self.r_non(s, min(self.dem, self.y(s)))

    def b(self, s: float) -> float:
        return self.r_non(s, min(self.c, self.y(s)))

    def _linear_pieces(self) -> list[tuple[float, float, float, float]]:
        """``(s0, s1, alpha, beta)`` with ``min(y(s), D) = alpha + beta*s`` on each piece."""
        xs, ps = self.non.dist.xs, self.non.dist.ps
        lam, dem, cap = self.lam, self.dem, self.cap
        out = []
        for j in range(1, xs.size):
            if ps[j] <= ps[j - 1]:
                continue
            s0, s1 = lam * ps[j - 1], lam * ps[j]
            if s0 >= cap:
                break
            s1 = min(s1, cap)
            beta = (xs[j] - xs[j - 1]) / (lam * (ps[j] - ps[j - 1]))
            alpha = xs[j - 1] - beta * lam * ps[j - 1]
            if alpha + beta * s0 >= dem:
                out.append((s0, s1, dem, 0.0))
            elif alpha + beta * s1 > dem:
                sd = (dem - alpha) / beta
                out.append((s0, sd, alpha, beta))
                out.append((sd, s1, dem, 0.0))
            else:
                out.append((s0, s1, alpha, beta))
        return out

    def breakpoints(self) -> tuple[float, ...]:
        pts = {p[0] for p in self.pieces} | {p[1] for p in self.pieces}
        return tuple(sorted(p for p in pts if 0 < p < self.cap))

    def integral(self, lo: float, hi: float) -> float:
        """``int_lo^hi ds / (s^2 (min(y(s), D) - c))``; ``inf`` if it diverges."""
        total = 0.0
        for s0, s1, alpha, beta in self.pieces:
            u0, u1 = max(s0, lo), min(s1, hi)
            if u1 <= u0:
                continue
            a = alpha - self.c
            if a + beta * u0 <= 0:
                return math.inf
            if beta == 0.0:
                total += (1.0 / u0 - 1.0 / u1) / a
            else:
                h1 = _psi(a / (beta * u1)) / (beta * u1 * u1)
                h0 = _psi(a / (beta * u0)) / (beta * u0 * u0)
                total += h1 - h0
        return total

    def cdf_non(self, p: float, low: float) -> float:
        return low * self.m1 * self.integral(low, p)

    def density_non(self, p: float, low: float) -> float:
        return low * self.m1 / (p * p * (min(self.y(p), self.dem) - self.c))

    def cdf_inv(self, p: float, low: float) -> float:
        ap, bp = self.a(p), self.b(p)
        return (ap - self.a(low)) / (ap - bp)

    def density_inv(self, p: float, low: float) -> float:
        y = self.y(p)
        ap, bp, al = self.a(p), self.b(p), self.a(low)
        dap, dbp = min(self.dem, y), min(self.c, y)
        return (dap * (ap - bp) - (ap - al) * (dap - dbp)) / (ap - bp) ** 2

    def root_inv(self) -> float | None:
        """Lower support at which the investor's CDF reaches 1 just below the cap."""
        if self.c <= 0:
            return None
        target = self.b(self.cap)
        lo, hi = 1e-9 * self.cap, self.cap - 1e-9 * self.cap
        f = lambda s: self.a(s) - target  # noqa: E731
        if not (f(lo) < 0 < f(hi)):
            return None
        return bisect(f, lo, hi, xtol=1e-10)

    def root_non(self) -> float | None:
        """Lower support at which the non-investor's CDF reaches 1 just below the cap."""
        lo, hi = 1e-9 * self.cap, self.cap - 1e-9 * self.cap

        def f(s: float) -> float:
            v = s * self.m1 * self.integral(s, self.cap)
            return min(v, _HUGE) - 1.0

        if not (f(lo) > 0 > f(hi)):
            return None
        return bisect(f, lo, hi, xtol=1e-10)


def s1s0_mixed(scenario: MarketScenario) -> PriceEquilibrium:
    """Mixed equilibrium when exactly one supplier invests."""
    _require_duopoly(scenario, (0, 1))
    m = _OneInvestor(scenario)
    roots = [r for r in (m.root_inv(), m.root_non()) if r is not None]
    if not roots:
        raise SolverError("no lower-support root in (0, price cap) for either supplier")
    low = max(roots)
    cap = m.cap
    top_inv = m.cdf_inv(cap, low)
    top_non = m.cdf_non(cap, low)
    atom_inv = max(1.0 - top_inv, 0.0)
    atom_non = max(1.0 - top_non, 0.0)
    # The supplier whose root set the lower support has no atom.
    if atom_inv >= atom_non:
        atom_non = 0.0
    else:
        atom_inv = 0.0
    atom_inv = atom_inv if atom_inv > 1e-9 else 0.0
    atom_non = atom_non if atom_non > 1e-9 else 0.0
    pts = m.breakpoints()
    cdf_inv = AnalyticPriceCdf(
        low, cap, atom_inv, lambda p: m.cdf_inv(p, low), lambda p: m.density_inv(p, low), pts
    )
    cdf_non = AnalyticPriceCdf(
        low, cap, atom_non, lambda p: m.cdf_non(p, low), lambda p: m.density_non(p, low), pts
    )
    rev_inv = float(m.inv.revenue(low, min(m.dem, m.q), m.lam))
    rev_non = m.a(low)
    revenues = [0.0, 0.0]
    cdfs: list[MixedPriceCdf] = [cdf_inv, cdf_inv]
    revenues[m.w], revenues[m.n] = rev_inv, rev_non
    cdfs[m.w], cdfs[m.n] = cdf_inv, cdf_non
    return PriceEquilibrium(Regime.MIXED, tuple(revenues), mixed=tuple(cdfs), lower_support=low)


# -- neither supplier invests ----------------------------------------------------


def _lower_support_revenues(scenario: MarketScenario, low: float) -> tuple[float, ...]:
    lam, dem = scenario.penalty, scenario.demand
    return tuple(
        float(s.revenue(low, min(dem, float(s.quantity(low, lam))), lam)) for s in scenario.suppliers
    )


def _square_system(payoff: np.ndarray, own: np.ndarray, opp: np.ndarray):
    """Rival mixture on ``opp`` equalizing payoffs over ``own``; least squares if not square."""
    a = payoff[np.ix_(own, opp)]
    k_rows, k_cols = a.shape
    mat = np.zeros((k_rows + 1, k_cols + 1))
    mat[:k_rows, :k_cols] = a
    mat[:k_rows, k_cols] = -1.0
    mat[k_rows, :k_cols] = 1.0
    rhs = np.zeros(k_rows + 1)
    rhs[k_rows] = 1.0
    if k_rows == k_cols:
        try:
            sol = np.linalg.solve(mat, rhs)
        except np.linalg.LinAlgError:
            return None
    else:
        sol = np.linalg.lstsq(mat, rhs, rcond=None)[0]
    sigma = np.zeros(payoff.shape[1])
    sigma[opp] = sol[:k_cols]
    return sigma


def _contiguous_candidate(game: oracle.DiscreteGame, k: int, eps: float):
    """Both suppliers indifferent over ``grid[k:]``; then one pruning pass."""
    n = game.size
    support = np.arange(k, n)
    s2 = _square_system(game.payoff[0], support, support)
    s1 = _square_system(game.payoff[1], support, support)
    if s1 is None or s2 is None:
        return None
    inside = lambda s: np.all((s[support] > 0) & (s[support] < 1))  # noqa: E731
    if inside(s1) and inside(s2):
        check = oracle.epsilon_nash_check(game, (s1, s2), eps)
        return (s1, s2, check) if check.passed else None
    keep1 = support[s1[support] > 0]
    keep2 = support[s2[support] > 0]
    if keep1.size == 0 or keep2.size == 0:
        return None
    s2 = _square_system(game.payoff[0], keep1, keep2)
    s1 = _square_system(game.payoff[1], keep2, keep1)
    if s1 is None or s2 is None:
        return None
    if np.any(s1 < 0) or np.any(s2 < 0) or abs(s1.sum() - 1) > 1e-9 or abs(s2.sum() - 1) > 1e-9:
        return None
    check = oracle.epsilon_nash_check(game, (s1, s2), eps)
    return (s1, s2, check) if check.passed else None


def lower_support_candidates(scenario: MarketScenario, grid: np.ndarray) -> list[int]:
    """Grid indices admissible as the common lower support without storage."""
    lam, dem = scenario.penalty, scenario.demand
    out = []
    for k, p in enumerate(grid):
        if p <= 0 or p >= scenario.price_cap:
            continue
        y = [float(s.quantity(p, lam)) for s in scenario.suppliers]
        if min(y) < dem <= sum(y) + TOL:
            out.append(k)
    return out


def s0s0_mixed_discretized(
    scenario: MarketScenario, price_step: float | None = None, epsilon: float | None = None
) -> PriceEquilibrium:
    """Grid mixed equilibrium when neither supplier invests.

    Candidate lower supports are tried with contiguous supports first. If
    none is an epsilon-Nash equilibrium, the linear-programming solver of
    :mod:`storagemarket.oracle` searches the same candidate range. Revenues
    are reported at the lower support of the accepted mixture.
    """
    _require_duopoly(scenario, (0, 0))
    step = scenario.price_cap / 200 if price_step is None else price_step
    game = oracle.build_discrete_game(scenario, step)
    eps = game.default_epsilon() if epsilon is None else epsilon
    cands = lower_support_candidates(scenario, game.price_grid)
    if not cands:
        raise SolverError("no admissible lower support on the price grid; try a finer price step")

    found = None
    for k in cands:
        found = _contiguous_candidate(game, k, eps)
        if found is not None:
            break
    if found is None:
        eq = oracle.solve_grid_equilibrium(game, (cands[0], cands[-1]), eps)
        check = oracle.epsilon_nash_check(game, eq.strategies, eps)
        if not check.passed:
            raise SolverError(
                f"grid equilibrium gain {check.gain:.3g} exceeds tolerance {eps:.3g}; try a finer price step"
            )
        found = (eq.strategies[0], eq.strategies[1], check)
    s1, s2, check = found
    grid = game.price_grid
    cdfs = (GridPriceCdf(grid, s1), GridPriceCdf(grid, s2))
    low = min(c.lower for c in cdfs)
    revenues = _lower_support_revenues(scenario, low)
    return PriceEquilibrium(
        Regime.MIXED,
        revenues,
        mixed=cdfs,
        lower_support=low,
        grid_values=check.values,
        grid_gain=check.gain,
    )


# -- dispatch and verification ------------------------------------------------


def solve_stage2(scenario: MarketScenario, price_step: float | None = None) -> PriceEquilibrium:
    """Equilibrium of a duopoly hour for whatever investment profile it carries.

    Without an explicit ``price_step`` the no-investment case starts at
    ``price_cap / 200`` and halves the step up to ``DEFAULT_REFINEMENTS``
    times when the grid is too coarse to certify.

    A supplier with no output at all (a point mass at zero) leaves its rival
    a monopoly; the rival then bids the cap and sells what demand allows.
    """
    pure = pure_equilibrium(scenario)
    if pure is not None:
        return pure
    idle = [s.dist.support_max <= TOL for s in scenario.suppliers]
    if any(idle):
        cap, lam, dem = scenario.price_cap, scenario.penalty, scenario.demand
        revenues = tuple(
            0.0 if off else float(s.revenue(cap, min(dem, float(s.quantity(cap, lam))), lam))
            for s, off in zip(scenario.suppliers, idle)
        )
        return PriceEquilibrium(Regime.PURE_CAP, revenues, prices=(cap,) * scenario.n_suppliers)
    n_inv = sum(scenario.profile)
    if n_inv < 2 and undercut_to_zero(scenario):
        raise RegimeError("no price equilibrium: each supplier's rivals cover demand at every positive price")
    if n_inv == 2:
        return s1s1_mixed(scenario)
    if n_inv == 1:
        return s1s0_mixed(scenario)
    if price_step is not None:
        return s0s0_mixed_discretized(scenario, price_step)
    # With the default grid, halve the step a few times before giving up.
    step = scenario.price_cap / 200
    for _ in range(DEFAULT_REFINEMENTS):
        try:
            return s0s0_mixed_discretized(scenario, step)
        except SolverError:
            step /= 2
    return s0s0_mixed_discretized(scenario, step)


def expected_revenue_vs_mixed(
    price: float,
    own_spec: SupplierSpec,
    opponent_cdf: MixedPriceCdf,
    scenario: MarketScenario,
) -> float:
    """Expected revenue of bidding ``price`` against a rival's mixed price."""
    rival = next(s for s in scenario.suppliers if s.id != own_spec.id)
    lam, dem = scenario.penalty, scenario.demand
    y_own = float(own_spec.quantity(price, lam))

    def own_rev(x: float) -> float:
        return float(own_spec.revenue(price, x, lam))

    cheaper = own_rev(min(dem, y_own)) * (1.0 - opponent_cdf.cdf(price))

    def undercut(s):
        sold = np.minimum(np.maximum(dem - np.asarray(rival.quantity(s, lam)), 0.0), y_own)
        return own_spec.revenue(price, sold, lam)

    dearer = opponent_cdf.integrate_below(undercut, price)

    tie = 0.0
    mass = opponent_cdf.prob_at(price)
    if mass > 0:
        y_rival = float(rival.quantity(price, lam))
        fns = [own_rev, lambda x: float(rival.revenue(price, x, lam))]
        alloc = allocate_demand([Bid(price, y_own), Bid(price, y_rival)], dem, fns)
        tie = mass * own_rev(alloc.purchased[0])
    return cheaper + dearer + tie


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of checking an equilibrium against brute-force deviations.

    ``spread`` is the largest difference in a supplier's expected revenue
    across its support and ``gain`` the largest improvement from any grid
    price; both are compared with ``tolerance`` (relative to revenue for
    analytic mixtures, absolute otherwise).
    """

    passed: bool
    spread: tuple[float, ...]
    gain: tuple[float, ...]
    tolerance: float
    relative: bool


def verify_equilibrium(
    scenario: MarketScenario,
    eq: PriceEquilibrium,
    price_step: float | None = None,
    points: int = 50,
    rel_tol: float = 1e-6,
) -> VerificationReport:
    """Indifference and no-deviation checks for a computed equilibrium.

    Analytic mixtures are checked at ``points`` prices spread over the
    support and at every grid price below it, to ``rel_tol`` relative.
    Grid mixtures are checked on their own grid to the revenue Lipschitz
    bound ``demand * price_step``. Pure equilibria are checked by unilateral
    deviation scans to ``1e-9 * price_cap * demand``.
    """
    cap, dem = scenario.price_cap, scenario.demand
    step = cap / 200 if price_step is None else price_step
    if eq.mixed is None:
        assert eq.prices is not None
        gain = oracle.pure_deviation_gain(scenario, eq.prices, step)
        tol = 1e-9 * cap * dem
        return VerificationReport(gain <= tol, (0.0,) * scenario.n_suppliers, (gain,), tol, False)

    spreads, gains = [], []
    analytic = isinstance(eq.mixed[0], AnalyticPriceCdf)
    if analytic:
        low = float(eq.lower_support)
        support = np.linspace(low, cap, points, endpoint=False)
        outside = [p for p in oracle.price_grid(cap, step) if p < low]
        tol = rel_tol
    else:
        grid_cdf = eq.mixed[0]
        assert isinstance(grid_cdf, GridPriceCdf)
        outside = list(grid_cdf.prices)
        tol = dem * float(grid_cdf.prices[1] - grid_cdf.prices[0])
    for i, spec in enumerate(scenario.suppliers):
        rival = eq.mixed[1 - i]

        def value(p: float) -> float:
            return expected_revenue_vs_mixed(float(p), spec, rival, scenario)

        if analytic:
            ref = eq.revenues[i]
            vals = np.array([value(p) for p in support])
            spreads.append(float(vals.max() - vals.min()) / ref)
            gains.append(max([0.0] + [(value(p) - ref) / ref for p in outside]))
        else:
            own = eq.mixed[i]
            assert isinstance(own, GridPriceCdf)
            idx = np.flatnonzero(own.masses > 1e-9)
            if idx.size > points:
                idx = idx[np.linspace(0, idx.size - 1, points).round().astype(int)]
            vals = np.array([value(own.prices[k]) for k in idx])
            ref = float(sum(own.masses[k] * value(own.prices[k]) for k in np.flatnonzero(own.masses > 0)))
            spreads.append(float(vals.max() - vals.min()))
            gains.append(max(0.0, max(value(p) for p in outside) - ref))
    passed = max(spreads) <= tol and max(gains) <= tol
    return VerificationReport(passed, tuple(spreads), tuple(gains), tol, analytic)

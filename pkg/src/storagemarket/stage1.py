"""Storage-investment game played before the market opens.

Each supplier decides whether to invest in storage. Its payoff is its
expected market revenue over all (month, hour) cells, given both decisions,
minus the per-hour storage cost if it invests. With two suppliers this is a
2x2 bimatrix game; helpers for the N-supplier case work directly on a table
of revenues indexed by investment profile.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import stage2
from .distributions import ScenarioWeights
from .errors import ConfigError, RegimeError, SolverError
from .market import TOL, MarketScenario, supplier_revenue

Profile = tuple[int, ...]
Cell = tuple[int, int]
DUOPOLY_PROFILES: tuple[Profile, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class SubgameRevenues:
    """Expected market revenue of each supplier in each investment profile.

    ``s1s0_with[i]`` is supplier ``i``'s revenue when only ``i`` invests and
    ``s1s0_without[i]`` its revenue when only the rival invests.
    ``expected_prices`` maps each profile to both suppliers' expected bid
    prices, when known.
    """

    s1s1: tuple[float, float]
    s1s0_with: tuple[float, float]
    s1s0_without: tuple[float, float]
    s0s0: tuple[float, float]
    expected_prices: Mapping[Profile, tuple[float, float]] | None = None

    def by_profile(self) -> dict[Profile, tuple[float, float]]:
        return {
            (0, 0): self.s0s0,
            (1, 0): (self.s1s0_with[0], self.s1s0_without[1]),
            (0, 1): (self.s1s0_without[0], self.s1s0_with[1]),
            (1, 1): self.s1s1,
        }

    @classmethod
    def from_profiles(
        cls,
        table: Mapping[Profile, Sequence[float]],
        expected_prices: Mapping[Profile, tuple[float, float]] | None = None,
    ) -> "SubgameRevenues":
        return cls(
            s1s1=(float(table[1, 1][0]), float(table[1, 1][1])),
            s1s0_with=(float(table[1, 0][0]), float(table[0, 1][1])),
            s1s0_without=(float(table[0, 1][0]), float(table[1, 0][1])),
            s0s0=(float(table[0, 0][0]), float(table[0, 0][1])),
            expected_prices=expected_prices,
        )

    @classmethod
    def symmetric(cls, s1s1: float, with_: float, without: float, s0s0: float) -> "SubgameRevenues":
        return cls((s1s1, s1s1), (with_, with_), (without, without), (s0s0, s0s0))


@dataclass(frozen=True)
class ProfitMatrix:
    """``payoff[phi_1, phi_2, i]`` is supplier ``i``'s profit at that profile."""

    payoff: np.ndarray
    revenues: SubgameRevenues
    costs: tuple[float, float]

    def profit(self, profile: Profile) -> tuple[float, float]:
        return tuple(float(v) for v in self.payoff[profile[0], profile[1]])  # type: ignore[return-value]


@dataclass(frozen=True)
class MixedInvestment:
    """Investment probabilities making each supplier indifferent.

    ``status`` is ``"interior"`` when both probabilities lie in [0, 1],
    ``"none"`` when the indifference solution leaves that range, and
    ``"degenerate"`` when some supplier is indifferent whatever the rival does.
    """

    status: str
    invest_probability: tuple[float, float] | None = None


@dataclass(frozen=True)
class InvestmentEquilibrium:
    pure: tuple[Profile, ...]
    mixed: MixedInvestment

    @property
    def label(self) -> str:
        """Region label: the distinct pure outcome types, or ``mixed-only``."""
        if not self.pure:
            return "mixed-only"
        kinds = sorted({_kind(p) for p in self.pure}, key=["S0S0", "S1S0", "S1S1"].index)
        return "+".join(kinds)


def _kind(profile: Profile) -> str:
    return {0: "S0S0", 1: "S1S0", 2: "S1S1"}[sum(profile)]


# -- expected revenues ---------------------------------------------------------


def _cell_weights(cells: Mapping[Cell, MarketScenario], weights: ScenarioWeights) -> dict[Cell, float]:
    expected = {(m, t) for m in range(1, weights.months + 1) for t in range(1, weights.hours_per_day + 1)}
    missing = sorted(expected - set(cells))
    if missing:
        raise ConfigError(f"no scenario for (month, hour) cells {missing[:5]}")
    extra = sorted(set(cells) - expected)
    if extra:
        raise ConfigError(f"cells {extra[:5]} fall outside the configured months and hours")
    return {c: weights.cell_weight(*c) for c in sorted(cells)}


def expected_subgame_revenues(
    cells: Mapping[Cell, MarketScenario],
    weights: ScenarioWeights,
    price_step: float | None = None,
    workers: int = 1,
) -> SubgameRevenues:
    """Solve every cell under all four investment profiles and average.

    Hours within a month are weighted equally and months by their
    probabilities. Results do not depend on ``workers``.
    """
    w = _cell_weights(cells, weights)
    jobs = [(cell, prof) for cell in w for prof in DUOPOLY_PROFILES]

    def solve(job):
        cell, prof = job
        try:
            eq = stage2.solve_stage2(cells[cell].with_profile(prof), price_step)
        except SolverError as exc:
            raise SolverError(f"cell (month={cell[0]}, hour={cell[1]}), profile {prof}: {exc}") from exc
        return eq.revenues, eq.expected_prices()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, jobs))
    else:
        results = [solve(j) for j in jobs]

    rev = {p: np.zeros(2) for p in DUOPOLY_PROFILES}
    price = {p: np.zeros(2) for p in DUOPOLY_PROFILES}
    for (cell, prof), (r, pr) in zip(jobs, results):
        rev[prof] += w[cell] * np.asarray(r)
        price[prof] += w[cell] * np.asarray(pr)
    prices = {p: (float(v[0]), float(v[1])) for p, v in price.items()}
    return SubgameRevenues.from_profiles(rev, prices)


# -- the 2x2 game --------------------------------------------------------------


def profit_matrix(rev: SubgameRevenues, costs: Sequence[float]) -> ProfitMatrix:
    if len(costs) != 2 or any(c < 0 for c in costs):
        raise ConfigError("need two nonnegative storage costs")
    payoff = np.zeros((2, 2, 2))
    for prof, r in rev.by_profile().items():
        for i in range(2):
            payoff[prof[0], prof[1], i] = r[i] - prof[i] * costs[i]
    return ProfitMatrix(payoff, rev, (float(costs[0]), float(costs[1])))


def pure_investment_equilibria(matrix: ProfitMatrix) -> list[Profile]:
    """Profiles where no supplier gains by switching its own decision."""
    out = []
    for prof in DUOPOLY_PROFILES:
        stable = True
        for i in range(2):
            dev = list(prof)
            dev[i] = 1 - dev[i]
            if matrix.payoff[dev[0], dev[1], i] > matrix.payoff[prof[0], prof[1], i] + TOL:
                stable = False
        if stable:
            out.append(prof)
    return out


def interval_equilibria(rev: SubgameRevenues, costs: Sequence[float]) -> list[Profile]:
    """Pure equilibria read off closed cost intervals rather than deviations."""
    c = costs
    benefit_alone = [rev.s1s0_with[i] - rev.s0s0[i] for i in range(2)]
    benefit_joint = [rev.s1s1[i] - rev.s1s0_without[i] for i in range(2)]
    out = []
    if all(c[i] >= benefit_alone[i] - TOL for i in range(2)):
        out.append((0, 0))
    for i in range(2):
        j = 1 - i
        if 0 <= c[i] <= benefit_alone[i] + TOL and c[j] >= benefit_joint[j] - TOL:
            out.append((1, 0) if i == 0 else (0, 1))
    if all(c[i] <= benefit_joint[i] + TOL for i in range(2)):
        out.append((1, 1))
    return sorted(out)


def mixed_investment_equilibrium(matrix: ProfitMatrix) -> MixedInvestment:
    """Investment probabilities solving both suppliers' indifference conditions.

    ``invest_probability[i]`` is supplier ``i``'s probability of investing,
    chosen to make the rival indifferent.
    """
    prob = [0.0, 0.0]
    for i in range(2):
        j = 1 - i

        def pay(own: int, other: int) -> float:
            prof = [0, 0]
            prof[i], prof[j] = own, other
            return float(matrix.payoff[prof[0], prof[1], i])

        # Gain from investing is linear in the rival's investment probability x.
        g0 = pay(1, 0) - pay(0, 0)
        g1 = pay(1, 1) - pay(0, 1)
        slope = g1 - g0
        if abs(slope) <= TOL:
            if abs(g0) <= TOL:
                return MixedInvestment("degenerate")
            return MixedInvestment("none")
        x = -g0 / slope
        if x < -TOL or x > 1 + TOL:
            return MixedInvestment("none")
        prob[j] = min(max(x, 0.0), 1.0)
    return MixedInvestment("interior", (prob[0], prob[1]))


def solve_stage1(matrix: ProfitMatrix) -> InvestmentEquilibrium:
    return InvestmentEquilibrium(tuple(pure_investment_equilibria(matrix)), mixed_investment_equilibrium(matrix))


def benefit_bound(rev: SubgameRevenues) -> tuple[float, float]:
    """Largest revenue gain either supplier can get from investing, over rival choices.

    Above this cost nobody invests in the unique pure equilibrium.
    """
    return tuple(  # type: ignore[return-value]
        max(rev.s1s0_with[i] - rev.s0s0[i], rev.s1s1[i] - rev.s1s0_without[i]) for i in range(2)
    )


# -- high-demand threshold -------------------------------------------------------


def high_demand_threshold(scenario: MarketScenario) -> float:
    """Demand above which every investment profile clears at the cap."""
    best = 0.0
    for prof in itertools.product((0, 1), repeat=scenario.n_suppliers):
        best = max(best, float(scenario.with_profile(prof).cap_quantities().sum()))
    return best


def cap_benefit(scenario: MarketScenario, index: int) -> float:
    """Revenue gain from storage for one supplier when it sells everything at the cap."""
    s = scenario.suppliers[index]
    cap, lam = scenario.price_cap, scenario.penalty
    without = supplier_revenue(cap, s.dist.inv_cdf(cap / lam), False, s.dist, lam)
    return cap * s.dist.mean() - float(without)


def dominant_strategy_threshold(
    cells: Mapping[Cell, MarketScenario], weights: ScenarioWeights, index: int
) -> float:
    """Cost below which supplier ``index`` invests whatever its rivals do.

    Only meaningful when every cell's demand is at or above
    :func:`high_demand_threshold`; otherwise :class:`RegimeError` is raised.
    """
    w = _cell_weights(cells, weights)
    total = 0.0
    for cell, weight in w.items():
        sc = cells[cell]
        if sc.demand < high_demand_threshold(sc) - TOL:
            raise RegimeError(f"cell {cell}: demand {sc.demand} is below the high-demand threshold")
        total += weight * cap_benefit(sc, index)
    return total


# -- any number of suppliers --------------------------------------------------


def pure_profile_revenues(
    cells: Mapping[Cell, MarketScenario], weights: ScenarioWeights
) -> dict[Profile, np.ndarray] | None:
    """Expected revenues for every profile, or ``None`` if some cell needs a mixed equilibrium."""
    w = _cell_weights(cells, weights)
    n = next(iter(cells.values())).n_suppliers
    out: dict[Profile, np.ndarray] = {}
    for prof in itertools.product((0, 1), repeat=n):
        acc = np.zeros(n)
        for cell, weight in w.items():
            eq = stage2.pure_equilibrium(cells[cell].with_profile(prof))
            if eq is None:
                return None
            acc += weight * np.asarray(eq.revenues)
        out[prof] = acc
    return out


def pure_equilibria_from_table(revenues: Mapping[Profile, np.ndarray], costs: Sequence[float]) -> list[Profile]:
    """Brute-force pure investment equilibria of an N-supplier game."""
    out = []
    for prof in sorted(revenues):
        profit = np.asarray(revenues[prof]) - np.asarray(prof) * np.asarray(costs)
        stable = True
        for i in range(len(prof)):
            dev = list(prof)
            dev[i] = 1 - dev[i]
            dev_t = tuple(dev)
            if revenues[dev_t][i] - dev_t[i] * costs[i] > profit[i] + TOL:
                stable = False
                break
        if stable:
            out.append(prof)
    return out


def benefit_bounds_from_table(revenues: Mapping[Profile, np.ndarray]) -> np.ndarray:
    """Per-supplier maximum revenue gain from switching to storage, over all profiles."""
    n = len(next(iter(revenues)))
    bounds = np.full(n, -np.inf)
    for prof, rev in revenues.items():
        for i in range(n):
            if prof[i] == 0:
                dev = prof[:i] + (1,) + prof[i + 1 :]
                bounds[i] = max(bounds[i], revenues[dev][i] - rev[i])
    return bounds


@dataclass(frozen=True)
class OligopolyInvestmentDiagnostics:
    """Which sufficient conditions on cost and demand apply.

    ``benefit_bounds`` and ``all_out_unique`` need revenues for every profile
    and are ``None`` when some profile requires a mixed equilibrium.
    ``excluded_profiles`` are ruled out because demand is so low that all of
    their investors earn nothing. ``invest`` is each supplier's dominant
    choice when demand is high everywhere, else ``None``.
    """

    benefit_bounds: tuple[float, ...] | None
    all_out_unique: bool | None
    excluded_profiles: tuple[Profile, ...]
    thresholds: tuple[float, ...] | None
    invest: tuple[bool, ...] | None


def low_demand_excluded(cells: Mapping[Cell, MarketScenario], profile: Profile) -> bool:
    """True if every cell's demand forces zero prices for this set of investors."""
    investors = [i for i, f in enumerate(profile) if f]
    if len(investors) < 2:
        return False
    for sc in cells.values():
        y = sc.with_profile(profile).cap_quantities()
        total = y[investors].sum()
        if sc.demand > min(total - y[j] for j in investors) + TOL:
            return False
    return True


def oligopoly_investment_checks(
    cells: Mapping[Cell, MarketScenario], weights: ScenarioWeights, costs: Sequence[float]
) -> OligopolyInvestmentDiagnostics:
    n = next(iter(cells.values())).n_suppliers
    if len(costs) != n or any(c < 0 for c in costs):
        raise ConfigError(f"need {n} nonnegative storage costs")
    table = pure_profile_revenues(cells, weights)
    bounds = all_out = None
    if table is not None:
        b = benefit_bounds_from_table(table)
        bounds = tuple(float(v) for v in b)
        all_out = bool(all(costs[i] > b[i] for i in range(n)))
    excluded = tuple(
        p for p in itertools.product((0, 1), repeat=n) if low_demand_excluded(cells, p)
    )
    thresholds = invest = None
    if all(sc.demand >= high_demand_threshold(sc) - TOL for sc in cells.values()):
        thresholds = tuple(dominant_strategy_threshold(cells, weights, i) for i in range(n))
        invest = tuple(bool(costs[i] <= thresholds[i]) for i in range(n))
    return OligopolyInvestmentDiagnostics(bounds, all_out, excluded, thresholds, invest)

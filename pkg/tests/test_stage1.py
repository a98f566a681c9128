import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storagemarket import stage1, stage2
from storagemarket.distributions import ScenarioWeights, point_mass, uniform
from storagemarket.errors import ConfigError, RegimeError
from storagemarket.market import MarketScenario, SupplierSpec
from storagemarket.stage1 import SubgameRevenues

FIXTURE = SubgameRevenues.symmetric(5.0, 8.0, 3.0, 4.0)


def brute_force_pure(rev, costs):
    """Pure equilibria by checking every unilateral switch directly."""
    table = rev.by_profile()
    out = []
    for prof in itertools.product((0, 1), repeat=2):
        ok = True
        for i in range(2):
            dev = list(prof)
            dev[i] = 1 - dev[i]
            if table[tuple(dev)][i] - dev[i] * costs[i] > table[prof][i] - prof[i] * costs[i] + 1e-12:
                ok = False
        if ok:
            out.append(prof)
    return out


def uniform_cells(highs, demand, months=1, hours=1, cap=1.0, lam=2.0):
    sc = MarketScenario(cap, lam, demand, tuple(SupplierSpec(i, False, uniform(0, h)) for i, h in enumerate(highs)))
    return {(m, t): sc for m in range(1, months + 1) for t in range(1, hours + 1)}, ScenarioWeights.uniform(months, hours)


class TestProfitMatrix:
    def test_fixture_entries(self):
        m = stage1.profit_matrix(FIXTURE, (2.0, 2.0))
        assert m.profit((1, 1)) == pytest.approx((3, 3))
        assert m.profit((1, 0)) == pytest.approx((6, 3))
        assert m.profit((0, 1)) == pytest.approx((3, 6))
        assert m.profit((0, 0)) == pytest.approx((4, 4))

    def test_zero_revenue_investors_pay_cost(self):
        m = stage1.profit_matrix(SubgameRevenues.symmetric(0, 0, 0, 0), (1.0, 1.0))
        assert m.profit((1, 0)) == (-1.0, 0.0)
        assert m.profit((1, 1)) == (-1.0, -1.0)

    def test_zero_costs_leave_revenues(self):
        m = stage1.profit_matrix(FIXTURE, (0.0, 0.0))
        for prof, r in FIXTURE.by_profile().items():
            assert m.profit(prof) == pytest.approx(r)

    def test_rejects_negative_cost(self):
        with pytest.raises(ConfigError):
            stage1.profit_matrix(FIXTURE, (-1.0, 0.0))

    def test_round_trip_through_profiles(self):
        assert SubgameRevenues.from_profiles(FIXTURE.by_profile()).by_profile() == FIXTURE.by_profile()


class TestPureEquilibria:
    @pytest.mark.parametrize(
        "cost, expected", [(1.0, [(1, 1)]), (10.0, [(0, 0)]), (3.0, [(0, 1), (1, 0)])]
    )
    def test_fixture(self, cost, expected):
        m = stage1.profit_matrix(FIXTURE, (cost, cost))
        assert stage1.pure_investment_equilibria(m) == expected
        assert stage1.interval_equilibria(FIXTURE, (cost, cost)) == expected

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=8, max_size=8), st.lists(st.floats(0, 10), min_size=2, max_size=2))
    def test_intervals_match_brute_force(self, vals, costs):
        rev = SubgameRevenues((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]), (vals[6], vals[7]))
        m = stage1.profit_matrix(rev, costs)
        brute = brute_force_pure(rev, costs)
        assert stage1.pure_investment_equilibria(m) == brute
        assert stage1.interval_equilibria(rev, costs) == brute

    def test_labels(self):
        assert stage1.solve_stage1(stage1.profit_matrix(FIXTURE, (1, 1))).label == "S1S1"
        assert stage1.solve_stage1(stage1.profit_matrix(FIXTURE, (3, 3))).label == "S1S0"
        eq = stage1.InvestmentEquilibrium(((0, 0), (1, 1)), stage1.MixedInvestment("none"))
        assert eq.label == "S0S0+S1S1"
        assert stage1.InvestmentEquilibrium((), stage1.MixedInvestment("none")).label == "mixed-only"


class TestMixedEquilibrium:
    def test_fixture_half(self):
        mix = stage1.mixed_investment_equilibrium(stage1.profit_matrix(FIXTURE, (3, 3)))
        assert mix.status == "interior"
        assert mix.invest_probability == pytest.approx((0.5, 0.5))

    def test_dominant_strategy_has_none(self):
        assert stage1.mixed_investment_equilibrium(stage1.profit_matrix(FIXTURE, (10, 10))).status == "none"

    def test_degenerate(self):
        rev = SubgameRevenues.symmetric(2.0, 2.0, 1.0, 1.0)
        assert stage1.mixed_investment_equilibrium(stage1.profit_matrix(rev, (1, 1))).status == "degenerate"

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=8, max_size=8), st.lists(st.floats(0, 10), min_size=2, max_size=2))
    def test_interior_solution_is_indifferent(self, vals, costs):
        rev = SubgameRevenues((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]), (vals[6], vals[7]))
        m = stage1.profit_matrix(rev, costs)
        mix = stage1.mixed_investment_equilibrium(m)
        if mix.status != "interior":
            return
        pr = mix.invest_probability
        assert all(0 <= p <= 1 for p in pr)
        for i in range(2):
            j = 1 - i
            q = pr[j]

            def pay(own, other):
                prof = [0, 0]
                prof[i], prof[j] = own, other
                return m.payoff[prof[0], prof[1], i]

            invest = q * pay(1, 1) + (1 - q) * pay(1, 0)
            stay = q * pay(0, 1) + (1 - q) * pay(0, 0)
            assert invest == pytest.approx(stay, abs=1e-9)


class TestExpectedRevenues:
    def test_single_cell_equals_stage2(self):
        cells, w = uniform_cells((2.0, 3.0), 1.2)
        rev = stage1.expected_subgame_revenues(cells, w)
        sc = cells[1, 1]
        for prof, r in rev.by_profile().items():
            assert r == pytest.approx(stage2.solve_stage2(sc.with_profile(prof)).revenues)

    def test_identical_cells_average_to_one(self):
        one = stage1.expected_subgame_revenues(*uniform_cells((2.0, 3.0), 1.5))
        two = stage1.expected_subgame_revenues(*uniform_cells((2.0, 3.0), 1.5, months=2))
        for prof in stage1.DUOPOLY_PROFILES:
            assert two.by_profile()[prof] == pytest.approx(one.by_profile()[prof])

    def test_high_demand_no_storage(self):
        cells, w = uniform_cells((1.0, 1.0), 1.0, cap=0.5, lam=1.0)
        rev = stage1.expected_subgame_revenues(cells, w)
        assert rev.s0s0 == pytest.approx((0.125, 0.125))

    def test_workers_do_not_change_result(self):
        cells, w = uniform_cells((2.0, 3.0), 2.5, hours=2)
        a = stage1.expected_subgame_revenues(cells, w, workers=1)
        b = stage1.expected_subgame_revenues(cells, w, workers=3)
        assert a.by_profile() == b.by_profile()

    def test_missing_cell(self):
        cells, _ = uniform_cells((2.0, 3.0), 1.5)
        with pytest.raises(ConfigError):
            stage1.expected_subgame_revenues(cells, ScenarioWeights.uniform(1, 2))

    def test_positive_without_storage(self):
        rev = stage1.expected_subgame_revenues(*uniform_cells((2.0, 3.0), 1.5))
        assert min(rev.s1s0_without) > 0 and min(rev.s0s0) > 0


class TestThresholds:
    def test_uniform_cap_benefit(self):
        cells, w = uniform_cells((1.0, 1.0), 5.0)
        assert stage1.cap_benefit(cells[1, 1], 0) == pytest.approx(0.25)
        assert stage1.dominant_strategy_threshold(cells, w, 1) == pytest.approx(0.25)

    def test_point_mass_has_no_benefit(self):
        sups = (SupplierSpec(0, False, point_mass(1.0), allow_point_mass=True), SupplierSpec(1, False, uniform(0, 1)))
        assert stage1.cap_benefit(MarketScenario(1.0, 2.0, 5.0, sups), 0) == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 2.0), st.floats(0.1, 3.0), st.floats(1.05, 5.0))
    def test_nondegenerate_benefit_positive(self, low, width, lam):
        sups = (SupplierSpec(0, False, uniform(low, low + width)), SupplierSpec(1, False, uniform(0, 1)))
        assert stage1.cap_benefit(MarketScenario(1.0, lam, 50.0, sups), 0) > 0

    def test_threshold_needs_high_demand(self):
        cells, w = uniform_cells((1.0, 1.0), 0.5)
        with pytest.raises(RegimeError):
            stage1.dominant_strategy_threshold(cells, w, 0)

    def test_high_demand_threshold(self):
        cells, _ = uniform_cells((1.0, 2.0), 1.0)
        # Investing suppliers bid their means; the others the cap/penalty quantile.
        assert stage1.high_demand_threshold(cells[1, 1]) == pytest.approx(1.5)

    def test_costs_above_benefit_bound_leave_only_all_out(self):
        rev = stage1.expected_subgame_revenues(*uniform_cells((2.0, 3.0), 1.5))
        bound = stage1.benefit_bound(rev)
        costs = tuple(b + 1e-6 for b in bound)
        m = stage1.profit_matrix(rev, costs)
        assert stage1.pure_investment_equilibria(m) == [(0, 0)] == brute_force_pure(rev, costs)


class TestOligopolyDiagnostics:
    def _cells(self, demand):
        sups = tuple(SupplierSpec(i, False, uniform(0, h)) for i, h in enumerate((2.0, 2.0, 3.0)))
        sc = MarketScenario(1.0, 2.0, demand, sups)
        return {(1, 1): sc}, ScenarioWeights.uniform(1, 1)

    def test_high_demand_recommendation(self):
        cells, w = self._cells(20.0)
        th = [stage1.dominant_strategy_threshold(cells, w, i) for i in range(3)]
        costs = (th[0] - 0.01, th[1] + 0.01, th[2] - 0.01)
        diag = stage1.oligopoly_investment_checks(cells, w, costs)
        assert diag.invest == (True, False, True)
        table = stage1.pure_profile_revenues(cells, w)
        assert stage1.pure_equilibria_from_table(table, costs) == [(1, 0, 1)]

    def test_low_demand_excludes_investor_pairs(self):
        cells, w = self._cells(0.3)
        diag = stage1.oligopoly_investment_checks(cells, w, (0.1, 0.1, 0.1))
        assert (1, 1, 0) in diag.excluded_profiles and (1, 1, 1) in diag.excluded_profiles
        assert (1, 0, 0) not in diag.excluded_profiles
        # Investors there earn nothing, so paying for storage loses money.
        eq = stage2.pure_equilibrium(cells[1, 1].with_profile((1, 1, 0)))
        assert eq.kind is stage2.Regime.PURE_ZERO
        assert diag.invest is None and diag.benefit_bounds is None

    def test_table_bounds(self):
        cells, w = self._cells(20.0)
        table = stage1.pure_profile_revenues(cells, w)
        bounds = stage1.benefit_bounds_from_table(table)
        np.testing.assert_allclose(bounds, [stage1.cap_benefit(cells[1, 1], i) for i in range(3)])
        diag = stage1.oligopoly_investment_checks(cells, w, tuple(bounds + 0.01))
        assert diag.all_out_unique
        assert stage1.pure_equilibria_from_table(table, tuple(bounds + 0.01)) == [(0, 0, 0)]

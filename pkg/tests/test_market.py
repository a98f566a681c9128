import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import allocation_vertex_oracle
from storagemarket.distributions import point_mass, uniform
from storagemarket.errors import ConfigError
from storagemarket.market import (
    Bid,
    MarketScenario,
    SupplierSpec,
    allocate_demand,
    dominant_quantity,
    supplier_revenue,
)


def _alloc(prices, quantities, demand, revenues=None):
    bids = [Bid(p, q) for p, q in zip(prices, quantities)]
    return allocate_demand(bids, demand, revenues).purchased


class TestAllocateDemand:
    def test_cheaper_supplier_first(self):
        assert _alloc((0.5, 0.8), (2, 2), 3) == pytest.approx((2, 1))
        best, verts = allocation_vertex_oracle((0.5, 0.8), (2, 2), 3)
        assert len(verts) == 1 and tuple(verts[0]) == pytest.approx((2, 1))

    def test_cheap_supplier_covers_everything(self):
        assert _alloc((0.5, 0.8), (5, 5), 3) == pytest.approx((3, 0))
        _, verts = allocation_vertex_oracle((0.5, 0.8), (5, 5), 3)
        assert tuple(verts[0]) == pytest.approx((3, 0))

    @pytest.mark.parametrize("prices", [(0.1, 0.9), (0.9, 0.1), (0.5, 0.5)])
    def test_excess_demand_buys_all(self, prices):
        assert _alloc(prices, (1.0, 2.0), 10.0) == pytest.approx((1.0, 2.0))

    def test_tie_without_revenues_averages_orders(self):
        assert _alloc((0.5, 0.5), (2, 2), 3) == pytest.approx((1.5, 1.5))

    def test_tie_prefers_revenue_maximizing_order(self):
        # Supplier 2 pays a penalty on anything it sells, so total revenue is
        # higher when supplier 1 is saturated first.
        fns = [lambda x: 1.0 * x, lambda x: 1.0 * x - 5.0 * x]
        assert _alloc((1.0, 1.0), (2, 2), 3, fns) == pytest.approx((2, 1))

    def test_three_way_tie(self):
        x = _alloc((0.4, 0.4, 0.4), (1, 1, 1), 1.5)
        assert x == pytest.approx((0.5, 0.5, 0.5))

    def test_rejects_nonpositive_demand(self):
        with pytest.raises(ConfigError):
            _alloc((0.1, 0.2), (1, 1), 0.0)

    def test_bid_validation(self):
        with pytest.raises(ConfigError):
            Bid(-0.1, 1.0)
        with pytest.raises(ConfigError):
            Bid(0.1, -1.0)

    @settings(max_examples=150, deadline=None)
    @given(
        st.lists(st.integers(0, 20), min_size=2, max_size=4),
        st.lists(st.floats(0.0, 5.0), min_size=4, max_size=4),
        st.floats(0.01, 25.0),
    )
    def test_against_vertex_oracle(self, price_ticks, quantities, demand):
        # Prices on a coarse grid so ties occur often.
        prices = [t / 20 for t in price_ticks]
        qty = quantities[: len(prices)]
        x = np.array(_alloc(prices, qty, demand))
        assert np.all(x >= -1e-12) and np.all(x <= np.array(qty) + 1e-12)
        assert x.sum() == pytest.approx(min(demand, sum(qty)), abs=1e-9)
        best, verts = allocation_vertex_oracle(prices, qty, demand)
        assert float(np.dot(prices, x)) == pytest.approx(best, abs=1e-9)
        if len(set(prices)) == len(prices):
            assert x == pytest.approx(verts[0], abs=1e-9)


class TestDominantQuantity:
    def test_investor_bids_mean(self):
        assert dominant_quantity(0.7, True, uniform(0, 6), 2.0) == pytest.approx(3.0)

    def test_non_investor_uniform(self):
        assert dominant_quantity(0.5, False, uniform(0, 1), 1.0) == pytest.approx(0.5)

    def test_zero_price_zero_quantity(self):
        assert dominant_quantity(0.0, False, uniform(1, 3), 2.0) == 0.0

    def test_vectorized(self):
        q = dominant_quantity(np.array([0.0, 0.5, 1.0]), False, uniform(0, 2), 1.0)
        np.testing.assert_allclose(q, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(dominant_quantity(np.array([0.1, 0.2]), True, uniform(0, 2), 1.0), [1, 1])

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.5, 5.0))
    def test_maximizes_expected_revenue(self, price, high):
        # The quantity should beat nearby alternatives for a non-investor.
        d = uniform(0, high)
        lam = 1.0
        y = dominant_quantity(price, False, d, lam)
        base = supplier_revenue(price, y, False, d, lam)
        for dy in (-0.05, 0.05):
            alt = min(max(y + dy * high, 0.0), high)
            assert supplier_revenue(price, alt, False, d, lam) <= base + 1e-12


class TestSupplierRevenue:
    def test_investor_within_mean(self):
        assert supplier_revenue(1.0, 2.0, True, uniform(0, 6), 2.0) == pytest.approx(2.0)

    def test_investor_beyond_mean(self):
        assert supplier_revenue(1.0, 4.0, True, uniform(0, 6), 2.0) == pytest.approx(2.0)

    def test_non_investor_uniform(self):
        assert supplier_revenue(0.5, 1.0, False, uniform(0, 1), 1.0) == pytest.approx(0.0)

    def test_point_mass_shortfall(self):
        assert supplier_revenue(1.0, 3.0, False, point_mass(2.0), 2.0) == pytest.approx(1.0)

    def test_negative_sold_rejected(self):
        with pytest.raises(ValueError):
            supplier_revenue(1.0, -1.0, True, uniform(0, 1), 2.0)


class TestScenario:
    def _sups(self):
        return (SupplierSpec(0, True, uniform(0, 2)), SupplierSpec(1, False, uniform(0, 2)))

    def test_valid(self):
        sc = MarketScenario(1.0, 2.0, 1.0, self._sups(), grid_price=3.0)
        assert sc.n_suppliers == 2
        assert sc.profile == (1, 0)
        assert sc.with_profile((0, 1)).profile == (0, 1)
        assert sc.with_demand(2.5).demand == 2.5
        np.testing.assert_allclose(sc.cap_quantities(), [1.0, 1.0])

    @pytest.mark.parametrize(
        "cap, lam, dem, grid",
        [(0.0, 2.0, 1.0, 5.0), (1.0, 0.5, 1.0, 5.0), (1.0, 2.0, 0.0, 5.0), (1.0, 2.0, 1.0, 0.9)],
    )
    def test_rejects_invalid_constants(self, cap, lam, dem, grid):
        with pytest.raises(ConfigError):
            MarketScenario(cap, lam, dem, self._sups(), grid)

    def test_needs_two_suppliers(self):
        with pytest.raises(ConfigError):
            MarketScenario(1.0, 2.0, 1.0, self._sups()[:1])

    def test_point_mass_needs_flag(self):
        with pytest.raises(ConfigError):
            SupplierSpec(0, False, point_mass(1.0))
        assert SupplierSpec(0, False, point_mass(1.0), allow_point_mass=True).dist.is_point_mass

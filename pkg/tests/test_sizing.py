import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storagemarket import sizing
from storagemarket.errors import ConfigError
from storagemarket.sizing import ChargeDischargeSeries, StorageCostParams

trajectories = st.integers(0, 2**32 - 1).map(
    lambda seed: np.random.default_rng(seed).normal(0.0, 1.0, size=(30, 6))
)


def series(arr, month=1):
    return ChargeDischargeSeries({month: np.asarray(arr, dtype=float)})


class TestChargeDischarge:
    def test_constant_generation_gives_zero(self):
        samples = {(1, t): [3.0] * 5 for t in (1, 2, 3)}
        cd = sizing.charge_discharge_series(samples)
        np.testing.assert_allclose(cd.by_month[1], 0.0)

    def test_alternating_values(self):
        samples = {(1, 1): [0.0, 2.0, 0.0, 2.0]}
        cd = sizing.charge_discharge_series(samples)
        np.testing.assert_allclose(cd.by_month[1][:, 0], [-1, 1, -1, 1])

    def test_unit_efficiency_is_identity(self):
        rng = np.random.default_rng(0)
        samples = {(m, t): list(rng.uniform(0, 5, 10)) for m in (1, 2) for t in (1, 2)}
        raw = sizing.charge_discharge_series(samples)
        eff = sizing.charge_discharge_series(samples, 1.0, 1.0)
        for m in raw.months:
            np.testing.assert_array_equal(raw.by_month[m], eff.by_month[m])

    def test_losses(self):
        cd = sizing.charge_discharge_series({(1, 1): [0.0, 2.0]}, 0.9, 0.8)
        np.testing.assert_allclose(cd.by_month[1][:, 0], [-1 / 0.8, 0.9])

    def test_column_means_vanish(self):
        rng = np.random.default_rng(1)
        samples = {(1, t): list(rng.gamma(2, 1, 40)) for t in range(1, 7)}
        cd = sizing.charge_discharge_series(samples)
        np.testing.assert_allclose(cd.by_month[1].mean(axis=0), 0.0, atol=1e-12)

    def test_incomplete_days_rejected(self):
        with pytest.raises(ConfigError):
            sizing.charge_discharge_series({(1, 1): [1.0, 2.0], (1, 2): [1.0]})

    def test_bad_efficiency(self):
        with pytest.raises(ConfigError):
            sizing.charge_discharge_series({(1, 1): [1.0, 2.0]}, 1.2)


class TestChernoffBound:
    def test_zero_series(self):
        assert sizing.chernoff_bound(np.zeros((5, 3)), 1.0, "overflow") == pytest.approx(0.0, abs=1e-12)

    def test_single_period_coin(self):
        # inf over s of exp(-s) cosh(s) is 1/2, approached as s grows.
        b = sizing.chernoff_bound(np.array([[1.0], [-1.0]]), 1.0, "overflow")
        assert b == pytest.approx(0.5, abs=1e-12)

    def test_larger_capacity_not_worse(self):
        arr = np.array([[1.0], [-1.0]])
        assert sizing.chernoff_bound(arr, 2.0, "overflow") <= sizing.chernoff_bound(arr, 1.0, "overflow")

    def test_matches_brute_force_minimum(self):
        rng = np.random.default_rng(5)
        arr = rng.normal(0, 1, (40, 4))
        cap = 2.0
        partial = np.cumsum(arr, axis=1)
        s = np.linspace(1e-4, sizing.S_MAX, 200001)
        worst = 0.0
        for t in range(4):
            z = partial[:, t]
            vals = np.exp(-s * cap) * np.exp(np.outer(s, z)).mean(axis=1)
            worst = max(worst, vals.min())
        assert sizing.chernoff_bound(arr, cap, "overflow") == pytest.approx(min(worst, 1.0), rel=1e-6)

    def test_underflow_mirrors_overflow(self):
        rng = np.random.default_rng(2)
        arr = rng.normal(0, 1, (20, 5))
        assert sizing.chernoff_bound(arr, 1.5, "underflow") == pytest.approx(
            sizing.chernoff_bound(-arr, 1.5, "overflow")
        )

    @settings(max_examples=40, deadline=None)
    @given(trajectories, st.floats(0.05, 10.0), st.sampled_from(["underflow", "overflow"]))
    def test_in_unit_interval(self, arr, cap, side):
        b = sizing.chernoff_bound(arr, cap, side)
        assert 0.0 <= b <= 1.0

    @settings(max_examples=40, deadline=None)
    @given(trajectories, st.floats(0.05, 10.0), st.floats(0.0, 5.0), st.sampled_from(["underflow", "overflow"]))
    def test_nonincreasing_in_capacity(self, arr, cap, extra, side):
        assert sizing.chernoff_bound(arr, cap + extra, side) <= sizing.chernoff_bound(arr, cap, side) + 1e-12

    @settings(max_examples=20, deadline=None)
    @given(trajectories)
    def test_vanishes_for_large_capacity(self, arr):
        big = 6 * np.abs(arr).sum(axis=1).max()
        assert sizing.chernoff_bound(arr, big, "overflow") < 1e-6

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            sizing.chernoff_bound(np.zeros((2, 2)), 0.0, "overflow")
        with pytest.raises(ConfigError):
            sizing.chernoff_bound(np.zeros((2, 2)), 1.0, "sideways")


class TestSizeCapacity:
    def test_deterministic_fixture(self):
        cd = series([[1.0, -1.0]] * 10)
        res = sizing.size_capacity(cd, 0.05, 0.5)
        assert res.underflow_capacity == pytest.approx(0.5)
        assert res.overflow_capacity == pytest.approx(1.5)
        assert res.total == pytest.approx(2.0)
        assert max(res.achieved_bounds) <= 0.05

    def test_zero_series_takes_first_grid_point(self):
        res = sizing.size_capacity(series(np.zeros((4, 3))), 0.05, 0.25)
        assert res.total == pytest.approx(0.5)

    @settings(max_examples=15, deadline=None)
    @given(trajectories, st.floats(0.01, 0.3))
    def test_grid_minimal(self, arr, alpha):
        cd = series(arr)
        res = sizing.size_capacity(cd, alpha)
        assert res.total == pytest.approx(res.underflow_capacity + res.overflow_capacity)
        for side, cap, bound in zip(("underflow", "overflow"), (res.underflow_capacity, res.overflow_capacity), res.achieved_bounds):
            assert bound <= alpha
            if cap - res.step > 1e-12:
                assert sizing.month_averaged_bound(cd, cap - res.step, side) > alpha

    @settings(max_examples=15, deadline=None)
    @given(trajectories)
    def test_halving_step_never_grows_capacity(self, arr):
        cd = series(arr)
        step = sizing.default_step(cd)
        coarse = sizing.size_capacity(cd, 0.05, step)
        fine = sizing.size_capacity(cd, 0.05, step / 2)
        assert fine.total <= coarse.total + 1e-12

    def test_month_weights(self):
        cd = ChargeDischargeSeries({1: np.zeros((3, 2)), 2: np.array([[1.0, -1.0]] * 3)})
        heavy = sizing.size_capacity(cd, 0.05, 0.5, {1: 0.99, 2: 0.01})
        even = sizing.size_capacity(cd, 0.05, 0.5)
        assert heavy.total < even.total

    def test_flat_series_needs_explicit_step(self):
        with pytest.raises(ConfigError):
            sizing.size_capacity(series(np.zeros((3, 2))), 0.05)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_range(self, alpha):
        with pytest.raises(ConfigError):
            sizing.size_capacity(series([[1.0, -1.0]]), alpha, 0.5)


class TestCosts:
    def test_zero_interest(self):
        p = StorageCostParams(1.0, 0.0, 10)
        assert sizing.annuity_factor(p) == pytest.approx(1 / (10 * 8760))
        near = StorageCostParams(1.0, 1e-9, 10)
        assert sizing.annuity_factor(near) == pytest.approx(1 / (10 * 8760), rel=1e-6)

    def test_reference_factor(self):
        assert sizing.annuity_factor(StorageCostParams(1.0, 0.05, 15)) == pytest.approx(1.0998e-5, rel=1e-4)

    def test_single_year(self):
        assert sizing.annuity_factor(StorageCostParams(1.0, 0.07, 1)) == pytest.approx(1.07 / 8760)

    def test_hourly_cost(self):
        p = StorageCostParams(1600.0, 0.05, 15)
        assert sizing.storage_cost(43.0, p) == pytest.approx(0.7567, abs=5e-4)
        assert sizing.storage_cost(43.0, StorageCostParams(0.0, 0.05, 15)) == 0.0

    def test_degradation(self):
        assert sizing.degradation_cost(series(np.zeros((3, 2))), 0.01) == 0.0
        assert sizing.degradation_cost(series([[2.0, -2.0]] * 4), 0.01) == pytest.approx(0.02)
        assert sizing.degradation_cost(series([[2.0, -2.0]]), 0.0) == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [dict(interest_rate=1.5), dict(lifetime_years=0), dict(charge_efficiency=0.0), dict(unit_capacity_cost=-1)],
    )
    def test_param_validation(self, kwargs):
        base = dict(unit_capacity_cost=1.0, interest_rate=0.05, lifetime_years=10)
        base.update(kwargs)
        with pytest.raises(ConfigError):
            StorageCostParams(**base)

    def test_cost_rises_with_interest(self):
        lo = sizing.annuity_factor(StorageCostParams(1.0, 0.01, 20))
        hi = sizing.annuity_factor(StorageCostParams(1.0, 0.10, 20))
        assert hi > lo > 0
        assert math.isfinite(hi)

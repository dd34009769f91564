from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windres.errors import FewerThanTwoPoints, NegativePower, NonMonotonicSpeeds, ZeroReferenceEnergy
from windres.power_model import PowerCurve, energy_total, generation_error, power_at_speed
from windres.resample import block_average

from conftest import make_series

LINEAR = PowerCurve.from_points([(0, 0), (10, 1000)])
RAMP = PowerCurve.from_points([(0, 0), (5, 0), (10, 1000)])
TYPICAL = PowerCurve.from_points([(0, 0), (3, 0), (12, 2000), (25, 2000)])


class TestCurve:
    def test_regions(self):
        curve = PowerCurve.from_points([(3, 0), (10, 1000), (25, 1000)])
        assert power_at_speed(curve, 2.0) == 0
        assert power_at_speed(curve, 25.0) == 1000
        assert power_at_speed(curve, 25.01) == 0
        assert power_at_speed(LINEAR, 5.0) == 500
        assert curve.cut_in == 10 and curve.cut_out == 25

    def test_cut_in_is_first_positive(self):
        assert TYPICAL.cut_in == 12
        assert PowerCurve.from_points([(0, 0), (3, 5), (10, 9)]).cut_in == 3

    def test_validation(self):
        with pytest.raises(NonMonotonicSpeeds):
            PowerCurve.from_points([(10, 1000), (5, 0)])
        with pytest.raises(NegativePower) as info:
            PowerCurve.from_points([(0, -1)])
        assert any("at least 2" in p for p in info.value.problems)
        with pytest.raises(FewerThanTwoPoints):
            PowerCurve.from_points([(0, 1)])

    @given(st.floats(min_value=0, max_value=24.999, allow_nan=False))
    def test_bounded(self, w):
        assert 0 <= power_at_speed(TYPICAL, w) <= TYPICAL.rated_power_kw

    @given(st.floats(min_value=0, max_value=24.99))
    def test_continuous_below_cut_out(self, w):
        eps = 1e-7
        assert abs(power_at_speed(TYPICAL, w + eps) - power_at_speed(TYPICAL, w)) <= 2000 / 9 * eps * 1.01 + 1e-9


class TestEnergy:
    def test_ten_minute_steps(self):
        assert energy_total(make_series([5.0] * 6), LINEAR)["total_energy_kwh"] == pytest.approx(500.0)

    def test_below_cut_in(self):
        assert energy_total(make_series([1.0, 2.0, 4.9]), RAMP)["total_energy_kwh"] == 0

    def test_three_hour_step(self):
        assert energy_total(make_series([5.0], step=10800), LINEAR)["total_energy_kwh"] == pytest.approx(1500.0)

    def test_cumulative(self):
        res = energy_total(make_series([5.0, 10.0, 0.0]), LINEAR)
        np.testing.assert_allclose(res["cumulative_kwh"], [500 / 6, 1500 / 6, 1500 / 6])
        assert str(res["end_times"][0]) == "2016-01-01T00:10:00"

    @given(
        st.lists(st.floats(0, 30, allow_nan=False), min_size=1, max_size=40),
        st.lists(st.floats(0, 30, allow_nan=False), min_size=1, max_size=40),
    )
    def test_additive_over_concatenation(self, a, b):
        ea = energy_total(make_series(a), TYPICAL)["total_energy_kwh"]
        eb = energy_total(make_series(b), TYPICAL)["total_energy_kwh"]
        eab = energy_total(make_series(a + b), TYPICAL)["total_energy_kwh"]
        assert eab == pytest.approx(ea + eb, rel=1e-12, abs=1e-9)


class TestGenerationError:
    def test_self_is_zero(self):
        s = make_series([3.0, 7.0, 11.0])
        rep = generation_error(s, {"copy": s}, TYPICAL)
        assert rep["copy"].relative_error_pct == 0.0
        assert rep["reference"].relative_error_pct == 0.0

    def test_affine_average_is_exact(self):
        rng = np.random.default_rng(0)
        s = make_series(rng.uniform(0, 10, 360))
        rep = generation_error(s, {"avg": block_average(s, 18)}, LINEAR)
        assert abs(rep["avg"].relative_error_pct) <= 1e-9

    def test_convex_ramp(self):
        s = make_series([4.0, 10.0] * 50)
        rep = generation_error(s, {"2-avg": block_average(s, 2)}, RAMP)
        assert rep["2-avg"].relative_error_pct == pytest.approx(-20.0, abs=1e-9)
        assert rep["2-avg"].absolute_error_kwh == pytest.approx(-0.2 * rep.reference_energy_kwh)

    def test_cumulative_fraction_ends_at_one(self):
        s = make_series([6.0, 8.0, 9.0])
        rep = generation_error(s, {}, TYPICAL)
        assert rep["reference"].cumulative_fraction[-1] == pytest.approx(1.0)

    def test_zero_reference(self):
        with pytest.raises(ZeroReferenceEnergy):
            generation_error(make_series([1.0, 2.0]), {}, RAMP)

    @settings(max_examples=100)
    @given(st.lists(st.floats(5, 10, allow_nan=False), min_size=2, max_size=2))
    def test_jensen_convex_block(self, block):
        # RAMP is affine (so convex) on [5, 10]: averaging never increases energy
        s = make_series(block)
        before = energy_total(s, RAMP)["total_energy_kwh"]
        after = energy_total(block_average(s, 2), RAMP)["total_energy_kwh"]
        assert after == pytest.approx(before, rel=1e-12, abs=1e-9)

    @settings(max_examples=100)
    @given(st.lists(st.floats(0, 10, allow_nan=False), min_size=4, max_size=4))
    def test_jensen_convex_curve_never_increases(self, block):
        s = make_series(block)
        before = energy_total(s, RAMP)["total_energy_kwh"]
        after = energy_total(block_average(s, 4), RAMP)["total_energy_kwh"]
        assert after <= before + 1e-9

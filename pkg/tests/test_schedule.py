"""Gain schedule: branch math, continuity, partials against the FD oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pedelec import (
    ConfigError,
    DomainError,
    ScheduleParams,
    alpha_gain,
    evaluate,
    f_competitive,
    f_cooperative,
    f_gain,
    f_partials,
    threshold,
)
from pedelec.schedule import competitive_peak_offset

from conftest import clear_of_kink, fd_partials

m_star_strategy = st.floats(min_value=0.2, max_value=1.0, allow_nan=False)
power_strategy = st.floats(min_value=0.0, max_value=500.0, allow_nan=False)


class TestThreshold:
    def test_endpoints(self, params):
        assert threshold(params.eta, params) == params.pt_min
        assert threshold(1.0, params) == params.pt_max

    def test_hand_value(self):
        p = ScheduleParams(eta=0.2, pt_min=80.0, pt_max=250.0)
        assert threshold(0.6, p) == pytest.approx(165.0, abs=1e-12)

    def test_domain_errors(self, params):
        with pytest.raises(DomainError):
            threshold(0.1, params)
        with pytest.raises(DomainError):
            threshold(1.01, params)

    @given(st.floats(min_value=0.2, max_value=0.999))
    def test_strictly_increasing(self, m):
        p = ScheduleParams()
        assert threshold(m + 1e-3, p) > threshold(m, p)


class TestFGain:
    def test_zero_input(self, params):
        assert f_gain(0.0, 0.45, params) == 0.0

    def test_unity_reference_cooperative_zero(self, params):
        assert f_gain(0.0, 1.0, params) == 0.0
        assert f_gain(100.0, 1.0, params) == 0.0  # below pt_max: cooperative

    def test_hand_value_cooperative(self, params):
        expected = ((0.55 / 0.45) * 100.0) ** 2
        assert f_gain(100.0, 0.45, params) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(14938.3, abs=0.1)

    def test_positive_for_positive_input(self, params):
        for m in (0.2, 0.45, 0.99):
            for p in (1.0, 50.0, 400.0):
                assert f_gain(p, m, params) > 0.0

    def test_branches_agree_exactly_at_threshold(self, params):
        for m in (0.2, 0.45, 0.6, 0.95, 1.0):
            pt = threshold(m, params)
            assert f_cooperative(pt, m, params) == f_competitive(pt, m, params)

    def test_negative_input_rejected(self, params):
        with pytest.raises(DomainError):
            f_gain(-1.0, 0.45, params)

    def test_asymptotic_switch_off(self, params):
        for m in (0.2, 0.45, 0.9):
            assert f_gain(5000.0, m, params) < 1e-12

    @given(m_star_strategy)
    @settings(max_examples=200)
    def test_c1_across_boundary(self, m):
        params = ScheduleParams()
        pt = threshold(m, params)
        # cooperative slope at the boundary, closed form
        analytic = 2.0 * ((1.0 - m) / m) ** 2 * pt
        _, comp_slope = f_partials(pt + 1e-11, m, params)
        assert comp_slope == pytest.approx(analytic, rel=1e-9, abs=1e-12)

    def test_interior_competitive_maximum_vs_grid(self, params):
        # dense 1-D search over the competitive branch vs the closed form
        for m in (0.25, 0.45, 0.7):
            pt = threshold(m, params)
            u_peak = competitive_peak_offset(m, params)
            grid = np.linspace(pt, pt + 400.0, 400001)
            vals = [f_gain(float(p), m, params) for p in grid]
            p_best = float(grid[int(np.argmax(vals))])
            assert p_best == pytest.approx(pt + u_peak, abs=2e-3)
            # strictly decreasing beyond the peak
            beyond = grid[grid > pt + u_peak + 1.0][:100]
            fv = [f_gain(float(p), m, params) for p in beyond]
            assert all(a > b for a, b in zip(fv, fv[1:]))

    @given(m_star_strategy, st.floats(min_value=0.1, max_value=1.0))
    @settings(max_examples=200)
    def test_cooperative_equilibrium_identity(self, m, frac):
        params = ScheduleParams()
        p = frac * threshold(m, params)
        f = f_gain(p, m, params)
        assert p / (math.sqrt(f) + p) == pytest.approx(m, abs=1e-12)


class TestAlphaGain:
    def test_floor_active_at_zero_input(self, params):
        assert alpha_gain(0.0, 0.45, params) == params.alpha_max

    def test_floor_boundary(self):
        # pick inputs that land f exactly on the floor: alpha = alpha_max
        params = ScheduleParams(epsilon_t=25.0)
        # cooperative f = eps_t at p = sqrt(eps_t)/r
        r = (1.0 - 0.45) / 0.45
        p = math.sqrt(params.epsilon_t) / r
        f = f_gain(p, 0.45, params)
        assert f == pytest.approx(params.epsilon_t, rel=1e-12)
        assert alpha_gain(p, 0.45, params) == pytest.approx(
            params.alpha_max, rel=1e-12
        )

    def test_hand_value(self, params):
        assert alpha_gain(100.0, 0.45, params) == pytest.approx(1.6735e-5, rel=1e-4)

    @given(m_star_strategy, power_strategy)
    def test_bounded_and_positive(self, m, p):
        params = ScheduleParams()
        a = alpha_gain(p, m, params)
        assert 0.0 < a <= params.alpha_max * (1.0 + 1e-15)

    @given(m_star_strategy, power_strategy)
    def test_product_is_half_kappa_above_floor(self, m, p):
        params = ScheduleParams()
        f = f_gain(p, m, params)
        if f >= params.epsilon_t:
            prod = alpha_gain(p, m, params) * f
            assert prod == pytest.approx(params.kappa / 2.0, rel=1e-14)


class TestPartials:
    def test_flat_along_unity_reference(self, params):
        _, df_dp = f_partials(100.0, 1.0, params)
        assert df_dp == 0.0

    def test_hand_value_cooperative(self, params):
        _, df_dp = f_partials(100.0, 0.45, params)
        assert df_dp == pytest.approx(2.0 * (0.55 / 0.45) ** 2 * 100.0, rel=1e-12)
        assert df_dp == pytest.approx(298.77, abs=0.01)

    @given(
        st.floats(min_value=0.21, max_value=0.99),
        st.floats(min_value=1.0, max_value=450.0),
    )
    @settings(max_examples=300)
    def test_matches_finite_differences(self, m, p):
        params = ScheduleParams()
        if not clear_of_kink(p, m, params, width=2e-3 + 1e-6 * params.threshold_slope):
            return
        a_dm, a_dp = f_partials(p, m, params)
        n_dm, n_dp = fd_partials(p, m, params)
        scale_p = max(abs(a_dp), abs(n_dp), 1.0)
        scale_m = max(abs(a_dm), abs(n_dm), 10.0)
        assert abs(a_dp - n_dp) / scale_p < 1e-5
        assert abs(a_dm - n_dm) / scale_m < 1e-5


class TestEvaluateAndParams:
    def test_bundle_consistency(self, params):
        ev = evaluate(120.0, 0.5, params)
        assert ev.f_value == f_gain(120.0, 0.5, params)
        assert ev.alpha_value == alpha_gain(120.0, 0.5, params)
        assert ev.p_threshold == threshold(0.5, params)
        assert ev.alpha_value <= params.alpha_max * (1.0 + 1e-15)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eta": 0.0},
            {"eta": 1.0},
            {"gamma_decay": 0.0},
            {"kappa": -1.0},
            {"epsilon_t": 0.0},
            {"pt_min": 0.0},
            {"pt_min": 300.0},  # above pt_max
        ],
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(ConfigError):
            ScheduleParams(**kwargs)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semiconj import IntegratorConfig, make_builtin
from semiconj.conjugacy import (
    DirectionSampler,
    ImageError,
    build_map,
    example_A_alpha,
    example_A_h,
    example_A_inverse,
    gamma_r,
    h_inverse,
    h_map,
    outer_radius_R,
    scalar_power_map,
    tau_case2,
)
from semiconj.flow import flow
from semiconj.levelset import crossing_time_forward, ray_level_point

E = math.e
SQRT2 = math.sqrt(2.0)
NORMALIZED = make_builtin("normalized", 2)
BOUNDED = make_builtin("normalized-bounded", 2, {"rho_dom": 2})
UNIT_MAP = build_map(NORMALIZED, 0.5, 1.0)
BOUNDED_MAP = build_map(BOUNDED, 0.5, 1.0, C=1.0)
PLANE_MAP_WIDE = build_map(make_builtin("x0-plane", 2), 0.25, 1.5)


def polar(radius, theta):
    return radius * np.array([math.cos(theta), math.sin(theta)])


class TestBuild:
    def test_normalized(self):
        m = build_map(NORMALIZED, 0.5, 1.0)
        assert m.radius == 1.0 and m.epsilon == 0.5 and m.frame.star_shaped_ok

    def test_bounded(self):
        m = build_map(BOUNDED, 0.5, 1.0)
        assert m.frame.star_shaped_ok and m.outer_level is None

    @pytest.mark.parametrize("eps, r", [(0.0, 1.0), (-1.0, 1.0), (0.5, 0.0), (0.5, -2.0)])
    def test_rejects_nonpositive(self, eps, r):
        with pytest.raises(ValueError):
            build_map(NORMALIZED, eps, r)

    def test_rejects_outer_level_below_epsilon(self):
        with pytest.raises(ValueError):
            build_map(BOUNDED, 0.5, 1.0, C=0.4)

    def test_level_set_outside_domain(self):
        with pytest.raises(ValueError):
            build_map(BOUNDED, 3.0, 1.0)


class TestForwardMap:
    def test_outside(self):
        np.testing.assert_allclose(h_map(UNIT_MAP, [2.0, 0.0]), [E, 0.0], atol=1e-10)

    def test_equilibrium(self):
        assert np.array_equal(h_map(UNIT_MAP, [0.0, 0.0]), [0.0, 0.0])

    def test_inside(self):
        np.testing.assert_allclose(h_map(UNIT_MAP, [0.5, 0.0]), [0.25, 0.0], atol=1e-12)

    @settings(max_examples=50)
    @given(st.floats(0.01, 6.0), st.floats(0, 2 * math.pi), st.sampled_from([0.5, 1.0, 2.0]))
    def test_matches_explicit_formula(self, radius, theta, r):
        m = UNIT_MAP if r == 1.0 else build_map(NORMALIZED, 0.5, r)
        x = polar(radius, theta)
        np.testing.assert_allclose(h_map(m, x), example_A_h(r, x), rtol=1e-10, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 2 * math.pi))
    def test_level_set_lands_on_radius(self, theta):
        m = PLANE_MAP_WIDE
        p = ray_level_point(m.frame, [math.cos(theta), math.sin(theta)])
        assert abs(np.linalg.norm(h_map(m, p)) - 1.5) <= m.frame.event_tol


class TestInverse:
    def test_outside(self):
        np.testing.assert_allclose(h_inverse(UNIT_MAP, [2.0, 0.0]), [1.0 + math.log(2.0), 0.0], atol=1e-10)

    def test_zero(self):
        assert np.array_equal(h_inverse(UNIT_MAP, [0.0, 0.0]), [0.0, 0.0])

    def test_inside(self):
        np.testing.assert_allclose(h_inverse(UNIT_MAP, [0.25, 0.0]), [0.5, 0.0], atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            h_inverse(UNIT_MAP, [1.0, 0.0, 0.0])

    @settings(max_examples=50)
    @given(st.floats(0.01, 10.0), st.floats(0, 2 * math.pi))
    def test_matches_explicit_formula(self, radius, theta):
        y = polar(radius, theta)
        np.testing.assert_allclose(h_inverse(UNIT_MAP, y), example_A_inverse(1.0, y), rtol=1e-10, atol=1e-12)

    @settings(max_examples=40)
    @given(st.floats(0.05, 5.0), st.floats(0, 2 * math.pi))
    def test_roundtrip_closed(self, radius, theta):
        x = polar(radius, theta)
        assert np.linalg.norm(h_inverse(UNIT_MAP, h_map(UNIT_MAP, x)) - x) <= 1e-10

    def test_outside_image_in_bounded_domain(self):
        with pytest.raises(ImageError):
            h_inverse(BOUNDED_MAP, [50.0, 0.0])


@pytest.fixture(scope="module")
def x0_map_fixture():
    return build_map(make_builtin("x0-plane", 2), 0.25, 1.0)


@pytest.mark.parametrize("x", [[1.0, 1.0], [0.1, -1.5], [-1.2, 0.05], [0.3, 0.2], [0.0, 0.9], [-0.05, -0.1]])
def test_roundtrip_numeric(x0_map_fixture, x):
    back = h_inverse(x0_map_fixture, h_map(x0_map_fixture, x))
    assert np.linalg.norm(back - np.asarray(x)) <= 1e-6


class TestGamma:
    def test_unit_radius(self):
        assert gamma_r(UNIT_MAP, 1.0) == pytest.approx(math.log(2.0), abs=1e-6)

    def test_zero(self):
        assert gamma_r(UNIT_MAP, 0.0) == 0.0

    def test_radius_two(self):
        m = build_map(NORMALIZED, 0.5, 2.0)
        assert gamma_r(m, 2.0) == pytest.approx(math.log(2.0), abs=1e-6)

    def test_negative(self):
        with pytest.raises(ValueError):
            gamma_r(UNIT_MAP, -0.1)

    def test_monotone_and_above_log_bound(self):
        m = build_map(NORMALIZED, 0.5, 1.0, sampler=DirectionSampler(count=16))
        values = [gamma_r(m, s) for s in np.linspace(0.25, 5.0, 20)]
        assert all(b > a for a, b in zip(values, values[1:]))
        for s, g in zip(np.linspace(0.25, 5.0, 20), values):
            assert g >= math.log(s + 1.0) - 1e-6

    def test_direction_dependent_system(self, x0_map_fixture):
        # on the plane system the infimum must sit at or below every sampled direction
        g = gamma_r(x0_map_fixture, 1.0)
        assert g > 0.0
        for theta in np.linspace(0, 2 * math.pi, 7, endpoint=False):
            y = 2.0 * np.array([math.cos(theta), math.sin(theta)])
            c = crossing_time_forward(x0_map_fixture.frame, h_inverse(x0_map_fixture, y))
            assert g <= c.time + 1e-9


class TestCaseTwo:
    def test_on_inner_level(self):
        assert tau_case2(BOUNDED_MAP, 1.0, [1.0, 0.0]) == 0.0

    def test_on_outer_level(self):
        assert tau_case2(BOUNDED_MAP, 1.0, [SQRT2, 0.0]) == pytest.approx(SQRT2 - 1.0, abs=1e-10)

    def test_inner_branch(self):
        assert tau_case2(BOUNDED_MAP, 1.0, [0.5, 0.0]) == pytest.approx(math.log(0.25), abs=1e-12)

    def test_stretch_beyond_outer_level(self):
        # V = 1.62 at |x| = 1.8, so the stretch adds 0.62
        assert tau_case2(BOUNDED_MAP, 1.0, [0.0, 1.8]) == pytest.approx(0.8 + 0.62, abs=1e-10)

    def test_rejects_low_outer_level(self):
        with pytest.raises(ValueError):
            tau_case2(BOUNDED_MAP, 0.5, [1.0, 0.0])
        with pytest.raises(ValueError):
            outer_radius_R(BOUNDED_MAP, 0.3)

    def test_outer_radius(self):
        assert outer_radius_R(BOUNDED_MAP, 1.0) == pytest.approx(math.exp(SQRT2 - 1.0), abs=1e-6)

    def test_outer_radius_scales_with_r(self):
        m = build_map(BOUNDED, 0.5, 2.0, C=1.0)
        assert outer_radius_R(m, 1.0) == pytest.approx(2.0 * math.exp(SQRT2 - 1.0), abs=1e-6)

    def test_outer_radius_approaches_r(self):
        radii = [outer_radius_R(BOUNDED_MAP, 0.5 + d) for d in (1e-1, 1e-2, 1e-3)]
        assert all(R > 1.0 for R in radii)
        assert radii[0] > radii[1] > radii[2]
        assert radii[2] - 1.0 < 2e-3

    @pytest.mark.parametrize("C", [0.6, 0.8, 1.0, 1.5, 1.9])
    def test_outer_radius_exceeds_r(self, C):
        assert outer_radius_R(BOUNDED_MAP, C) > BOUNDED_MAP.radius

    def test_stretched_map_roundtrip(self):
        x = np.array([1.2, 1.1])
        y = h_map(BOUNDED_MAP, x)
        np.testing.assert_allclose(h_inverse(BOUNDED_MAP, y), x, atol=1e-9)

    def test_offset_reading_is_configurable(self):
        m = build_map(BOUNDED, 0.5, 1.0, C=1.0, offset=0.0)
        assert tau_case2(m, 1.0, [0.0, 1.8]) == pytest.approx(0.8 + 1.62, abs=1e-10)


class TestExplicitFormulas:
    def test_h(self):
        np.testing.assert_allclose(example_A_h(1.0, [2.0, 0.0]), [E, 0.0])

    def test_alpha_at_radius(self):
        assert example_A_alpha(1.0, [0.0, 1.0]) == 1.0

    def test_alpha_outside(self):
        assert example_A_alpha(1.0, [2.0, 0.0]) == pytest.approx(1.0 + math.log(2.0), abs=1e-15)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            example_A_h(0.0, [1.0, 0.0])
        with pytest.raises(ValueError):
            example_A_alpha(-1.0, [1.0, 0.0])


class TestScalarPower:
    @pytest.mark.parametrize("a, b, x, expected", [(1, 2, 4, 16), (3, 5, 0, 0), (2, 1, -9, -3)])
    def test_examples(self, a, b, x, expected):
        assert scalar_power_map(a, b, x) == pytest.approx(expected, abs=1e-12)

    def test_bad_rates(self):
        with pytest.raises(ValueError):
            scalar_power_map(0.0, 1.0, 1.0)

    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-3, 3), st.floats(0, 5))
    def test_conjugates_linear_flows(self, a, b, x, t):
        lhs = scalar_power_map(a, b, math.exp(-a * t) * x)
        rhs = math.exp(-b * t) * scalar_power_map(a, b, x)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 5.0), st.floats(0, 2 * math.pi), st.floats(0, 1))
def test_conjugacy_numeric_spot_checks(scale, theta, frac):
    numeric = build_map(NORMALIZED, 0.5, 1.0, IntegratorConfig(use_closed_form=False),
                        sampler=DirectionSampler(count=8))
    y = polar(scale, theta)
    t = frac * math.log(scale)
    image = h_map(numeric, flow(NORMALIZED, h_inverse(numeric, y), t, numeric.config).state)
    assert np.linalg.norm(image - math.exp(-t) * y) <= 1e-5

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import betainc

from intervol.sampling import shard_rng
from intervol.spherical import (BOUND_COLUMNS, CapParams, asymptotic_ratio, bound_table,
                                bound_table_csv, cap_area, cap_pair_intersection, log_cap_area,
                                q_theta, sample_cap, spherical_constants,
                                verify_cap_intersection)

THETAS = [math.pi / 6, math.pi / 4, math.pi / 3]


def beta_cap_area(n, theta):
    """s_n(theta) from the regularized incomplete beta function."""
    return 0.5 * betainc((n - 1) / 2, 0.5, math.sin(theta) ** 2)


@given(st.floats(0.01, 1.56))
def test_low_dimension_closed_forms(theta):
    assert cap_area(CapParams(2, theta)) == pytest.approx(theta / math.pi, rel=1e-10)
    assert cap_area(CapParams(3, theta)) == pytest.approx((1 - math.cos(theta)) / 2, rel=1e-10)


@given(st.integers(4, 300), st.floats(0.05, 1.55))
def test_quadrature_matches_beta_oracle(n, theta):
    expect = beta_cap_area(n, theta)
    if expect > 1e-300:
        assert cap_area(CapParams(n, theta)) == pytest.approx(expect, rel=1e-10)


def test_cap_area_example_n50():
    s = cap_area(CapParams(50, math.pi / 3))
    lead = math.sin(math.pi / 3) ** 49 / (math.sqrt(2 * math.pi * 50) * math.cos(math.pi / 3))
    assert 0.9 <= s / lead <= 1.1


def test_log_area_survives_underflow():
    v = log_cap_area(CapParams(3000, 0.1))
    assert math.isfinite(v) and v < -700
    assert cap_area(CapParams(3000, 0.1)) == 0.0


@pytest.mark.parametrize("theta", THETAS)
def test_asymptotic_ratio_trend(theta):
    ratios = [asymptotic_ratio(n, theta) for n in range(20, 401, 20)]
    assert all(abs(b - 1) <= abs(a - 1) for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1) <= 0.1


def test_params_validation():
    for bad in (0.0, math.pi / 2, -0.1, 2.0):
        with pytest.raises(ValueError):
            CapParams(10, bad)
    with pytest.raises(ValueError):
        CapParams(1, 0.5)


def test_constants_at_sixty_degrees():
    k = spherical_constants(math.pi / 3)
    assert k.c_theta == pytest.approx(math.log(0.75 / math.sqrt(0.25 * 2)), abs=1e-12)
    assert k.c_theta == pytest.approx(0.0589, abs=5e-5)
    assert k.gklp_constant == pytest.approx(math.log(math.sin(math.pi / 3) / (math.sqrt(2) * 0.5)),
                                            abs=1e-12)
    assert k.gklp_constant == pytest.approx(0.2027, abs=5e-5)


@given(st.floats(1e-3, math.pi / 2 - 1e-6))
def test_q_theta_matches_geometry(theta):
    # the lens of two theta-caps at angle theta is centred on their midpoint;
    # its rim points satisfy cos(q) cos(theta/2) = cos(theta)
    geo = math.acos(math.cos(theta) / math.cos(theta / 2))
    assert q_theta(theta) == pytest.approx(geo, rel=1e-7, abs=1e-9)
    assert q_theta(theta) < theta


def test_q_theta_near_right_angle():
    for eps in (1e-2, 1e-4, 1e-6):
        assert q_theta(math.pi / 2 - eps) == pytest.approx(math.pi / 2, abs=2 * math.sqrt(eps))


@given(st.floats(0.1, 1.5), st.integers(10, 200))
def test_bound_table_invariants(theta, n):
    b = bound_table(n, theta)
    assert 0 < b.s_theta < 0.5
    assert b.q_theta < theta
    assert 0 < b.c_theta < b.gklp_constant
    assert b.jjp_bound / b.covering_bound == pytest.approx(b.c_theta * n)
    assert b.gklp_bound > b.jjp_bound


def test_bound_table_three_dimensions():
    assert bound_table(3, math.pi / 3).covering_bound == pytest.approx(4.0, rel=1e-12)


def test_bound_table_csv_columns():
    text = bound_table_csv([bound_table(10, 0.5), bound_table(20, 0.5)])
    lines = text.splitlines()
    assert tuple(lines[0].split(",")) == BOUND_COLUMNS
    assert len(lines) == 3


@pytest.mark.parametrize("n", [3, 10, 40])
def test_cap_sampler_latitude_distribution(n):
    theta = 0.7
    pts = sample_cap(shard_rng(11, 0), n, theta, 40_000)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert (pts[:, 0] >= math.cos(theta) - 1e-12).all()
    # P(angle <= phi) = s_n(phi)/s_n(theta)
    angles = np.arccos(np.clip(pts[:, 0], -1, 1))
    for phi in (0.3 * theta, 0.6 * theta, 0.9 * theta):
        frac = np.mean(angles <= phi)
        expect = beta_cap_area(n, phi) / beta_cap_area(n, theta)
        assert abs(frac - expect) <= 4 * math.sqrt(expect * (1 - expect) / 40_000) + 1e-12


def test_cap_sampler_is_rotation_symmetric():
    pts = sample_cap(shard_rng(3, 0), 6, 0.9, 40_000)
    assert np.abs(pts[:, 1:].mean(axis=0)).max() < 0.01


@pytest.mark.parametrize("n", [10, 20, 40])
@pytest.mark.parametrize("theta", THETAS)
def test_cap_intersection_within_bound(n, theta):
    rep = verify_cap_intersection(n, theta, 100_000, seed=n)
    assert rep.estimate <= rep.bound + 3 * rep.stderr
    assert rep.within_bound


def test_cap_intersection_preconditions():
    with pytest.raises(ValueError):
        verify_cap_intersection(101, 0.5, 10_000)
    with pytest.raises(ValueError):
        verify_cap_intersection(10, 0.5, 1000)


def test_pair_intersection_extremes():
    theta = 0.5
    s = cap_area(CapParams(8, theta))
    est, err = cap_pair_intersection(8, theta, 0.0, 20_000, seed=1)
    assert est == pytest.approx(s) and err == 0.0
    est, err = cap_pair_intersection(8, theta, 2 * theta + 1e-9, 20_000, seed=1)
    assert est == 0.0
    est, _ = cap_pair_intersection(8, theta, 2.5 * theta, 20_000, seed=1)
    assert est == 0.0


def test_monte_carlo_reproducible():
    a = verify_cap_intersection(10, 0.6, 40_000, seed=5)
    b = verify_cap_intersection(10, 0.6, 40_000, seed=5)
    assert a == b

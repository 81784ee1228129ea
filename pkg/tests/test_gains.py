import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satrack.gains import (
    GOLDEN_RATIO,
    CurvatureParams,
    GainRegionError,
    InvalidCurvature,
    SlackDomainError,
    gain_region,
    multiplier_bounds,
    q_lower,
    q_upper,
    select_gain,
    slack_domain,
    step_coefficients,
)


def u_quadratic_roots(R, q):
    """Oracle for the gain interval: roots of (q+1)x^2 - (q+2)x + (R^2 - R) = R... """
    # u(x) = 1 with x = a*L reduces to (q+1)x^2 - (q+2)x + R^2 - R = 0
    roots = np.roots([q + 1.0, -(q + 2.0), R * R - R])
    return float(np.min(roots.real)), float(np.max(roots.real))


def test_q_upper_values():
    assert q_upper(1.0) == 0.0
    np.testing.assert_allclose(q_upper(6.0), 70 + 12 * math.sqrt(35), rtol=1e-12)
    np.testing.assert_allclose(q_upper(6.0), 140.9929, atol=5e-5)
    np.testing.assert_allclose(q_upper(2.0), 6 + 4 * math.sqrt(3), rtol=1e-12)


def test_q_lower_values():
    assert q_lower(GOLDEN_RATIO) == 0.0
    assert q_lower(1.2) == 0.0
    np.testing.assert_allclose(q_lower(6.0), 58 + 2 * math.sqrt(870), rtol=1e-12)
    np.testing.assert_allclose(q_lower(6.0), 116.9915, atol=5e-5)
    np.testing.assert_allclose(q_lower(2.0), 2 + 2 * math.sqrt(2), rtol=1e-12)


def test_curvature_validation():
    with pytest.raises(InvalidCurvature):
        q_upper(0.5)
    with pytest.raises(InvalidCurvature):
        q_lower(0.999)
    with pytest.raises(InvalidCurvature):
        CurvatureParams(C=2.0, L=1.0)
    with pytest.raises(InvalidCurvature):
        CurvatureParams(C=0.0, L=1.0)


@pytest.mark.parametrize("R", np.linspace(1.001, 50.0, 40).tolist())
def test_q_endpoints_are_discriminant_roots(R):
    # Independent oracle: q_upper solves q^2 + 4(1-R^2)q + 4(1-R^2) = 0
    # (largest root), the condition for u >= 0 to hold across all gains.
    s = 1.0 - R * R
    roots = np.roots([1.0, 4.0 * s, 4.0 * s])
    np.testing.assert_allclose(q_upper(R), np.max(roots.real), rtol=1e-9)
    # q_lower solves q^2 - 4w q - 4w = 0, w = R^2 - R - 1 (largest root),
    # where the u < 1 interval closes.
    w = R * R - R - 1.0
    if w > 0:
        roots = np.roots([1.0, -4.0 * w, -4.0 * w])
        np.testing.assert_allclose(q_lower(R), np.max(roots.real), rtol=1e-9)


def test_slack_domain_branches():
    d1 = slack_domain(1.0)
    assert d1.lower == 0.0 and math.isinf(d1.upper)
    assert 1e9 in d1 and 0.0 not in d1

    d13 = slack_domain(1.3)
    assert d13.lower == 0.0
    np.testing.assert_allclose(d13.upper, q_upper(1.3), rtol=1e-15)

    d6 = slack_domain(6.0)
    np.testing.assert_allclose([d6.lower, d6.upper], [116.9915, 140.9929], atol=5e-5)
    assert d6.upper in d6 and d6.lower not in d6


def test_q_upper_exceeds_q_lower_and_monotone():
    grid = np.linspace(GOLDEN_RATIO + 1e-6, 50.0, 200)
    qu = np.array([q_upper(R) for R in grid])
    ql = np.array([q_lower(R) for R in grid])
    assert np.all(qu > ql)
    assert np.all(np.diff(qu) > 0)
    assert np.all(np.diff(ql) > 0)


def test_multiplier_bounds_unit_ratio():
    m_minus, m_plus = multiplier_bounds(1.0, 2.5)
    assert m_minus == 0.0
    np.testing.assert_allclose(m_plus, 4.5 / 3.5, rtol=1e-12)


def test_multiplier_bounds_worked_example():
    q = 0.4 * q_upper(6.0) + 0.6 * q_lower(6.0)
    np.testing.assert_allclose(q, 126.5923, atol=5e-4)
    m_minus, m_plus = multiplier_bounds(6.0, q)
    np.testing.assert_allclose([m_minus, m_plus], [0.3668, 0.6410], atol=1e-3)


@pytest.mark.parametrize("R,q", [(2.0, 10.0), (6.0, 130.0), (1.4, 1.0), (10.0, 380.0)])
def test_multiplier_bounds_match_quadratic_oracle(R, q):
    m_minus, m_plus = multiplier_bounds(R, q)
    lo, hi = u_quadratic_roots(R, q)
    np.testing.assert_allclose([m_minus, m_plus], [lo, hi], rtol=1e-9)


def test_multiplier_ordering():
    rng = np.random.default_rng(5)
    for _ in range(500):
        R = float(rng.uniform(1.0, 50.0))
        dom = slack_domain(R)
        hi = min(dom.upper, dom.lower + 100.0) if math.isinf(dom.upper) else dom.upper
        q = float(rng.uniform(dom.lower, hi))
        if q not in dom:
            continue
        m_minus, m_plus = multiplier_bounds(R, q)
        mid = (q / 2 + 1) / (q + 1)
        cap = (q + 2) / (q + 1)
        assert 0.0 <= m_minus < mid < m_plus <= cap + 1e-12


def test_multiplier_bounds_rejects_out_of_domain_slack():
    with pytest.raises(SlackDomainError):
        multiplier_bounds(6.0, 1.0)   # below q_lower(6)
    with pytest.raises(SlackDomainError):
        multiplier_bounds(2.0, 1e6)   # above q_upper(2)


def test_gain_region_branches():
    r1 = gain_region(1.0, 2.5)
    assert (r1.lo, r1.lo_inclusive, r1.hi_inclusive) == (1.0, True, False)
    np.testing.assert_allclose(r1.hi, 1 + 1 / 3.5, rtol=1e-12)
    assert 1.0 in r1 and r1.hi not in r1

    r13 = gain_region(1.3, q_upper(1.3))
    np.testing.assert_allclose(r13.lo, 1.0 / (q_upper(1.3) + 1.0), rtol=1e-12)
    assert r13.lo_inclusive

    q6 = 0.4 * q_upper(6.0) + 0.6 * q_lower(6.0)
    r6 = gain_region(6.0, q6)
    assert not r6.lo_inclusive and not r6.hi_inclusive
    assert 0.5 in r6
    assert 0.0 <= r6.lo < r6.hi <= 2.0


def test_step_coefficients_hand_case():
    sc = step_coefficients(C=1.0, L=1.0, q=1.0, a=1.0)
    assert sc.u == 0.0
    np.testing.assert_allclose(sc.v, 1.0, rtol=1e-12)


def test_step_coefficients_tracking_configuration():
    q = 0.4 * q_upper(6.0) + 0.6 * q_lower(6.0)
    sc = step_coefficients(C=5.0, L=30.0, q=q, a=0.5 / 30.0)
    assert 0.0 <= sc.u < 1.0
    assert sc.v > 0.0


def test_step_coefficients_u_approaches_one_at_boundary():
    q = 0.4 * q_upper(6.0) + 0.6 * q_lower(6.0)
    region = gain_region(6.0, q)
    us = []
    for frac in (0.9, 0.99, 0.999, 0.9999):
        aL = region.lo + frac * (region.hi - region.lo)
        us.append(step_coefficients(C=5.0, L=30.0, q=q, a=aL / 30.0).u)
    assert all(u < 1.0 for u in us)
    assert us == sorted(us)
    assert us[-1] > 0.999


def test_step_coefficients_region_error_carries_interval():
    with pytest.raises(GainRegionError) as exc:
        step_coefficients(C=5.0, L=30.0, q=130.0, a=1.9 / 30.0)
    region = exc.value.region
    assert 0.0 <= region.lo < region.hi <= 2.0


def test_select_gain_default_policy():
    q, a = select_gain(C=5.0, L=30.0)
    np.testing.assert_allclose(q, 126.5923, atol=5e-4)
    np.testing.assert_allclose(a, 0.5 / 30.0, rtol=1e-15)

    q, a = select_gain(C=2.0, L=2.0)
    assert q == 2.5
    np.testing.assert_allclose(a, 1.15 / 2.0, rtol=1e-15)


def test_select_gain_midpoint_identity():
    # midpoint of (m-, m+) is (q/2+1)/(q+1) for any admissible q
    q, a = select_gain(C=5.0, L=30.0, policy="midpoint")
    np.testing.assert_allclose(q, q_upper(6.0), rtol=1e-15)
    np.testing.assert_allclose(a * 30.0, (q / 2 + 1) / (q + 1), rtol=1e-12)


def test_select_gain_explicit_validates():
    q, a = select_gain(C=5.0, L=30.0, policy="explicit", q=130.0, a=0.5 / 30.0)
    assert (q, a) == (130.0, 0.5 / 30.0)
    with pytest.raises(GainRegionError):
        select_gain(C=5.0, L=30.0, policy="explicit", q=130.0, a=1.99 / 30.0)
    with pytest.raises(ValueError):
        select_gain(C=5.0, L=30.0, policy="no-such-policy")


@settings(max_examples=300, deadline=None)
@given(
    R=st.floats(min_value=1.0, max_value=50.0),
    qfrac=st.floats(min_value=1e-6, max_value=1.0),
    afrac=st.floats(min_value=1e-6, max_value=1.0, exclude_max=True),
)
def test_coefficient_ranges_inside_admissible_set(R, qfrac, afrac):
    # Anywhere inside the slack domain and gain region, u in [0,1), v >= 0.
    C = 5.0
    L = C * R
    R = L / C  # the ratio step_coefficients itself will reconstruct
    dom = slack_domain(R)
    upper = 100.0 if math.isinf(dom.upper) else dom.upper
    q = dom.lower + qfrac * (upper - dom.lower)
    if q not in dom:
        return
    region = gain_region(R, q)
    lo = region.lo if region.lo_inclusive else region.lo + 1e-12 * (region.hi - region.lo)
    aL = lo + afrac * (region.hi - lo)
    a = aL / L
    if a * L not in region:  # guard the aL -> a -> a*L roundtrip ulp
        return
    sc = step_coefficients(C=C, L=L, q=q, a=a)
    assert 0.0 <= sc.u < 1.0
    assert sc.v >= 0.0

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from hypersingular.errors import NonPositiveRadius, SignViolation, InvalidParams
from hypersingular.profiles import (ExpSinh, Monomial, MonomialSaturating, MonomialSum,
                                    certify_admissibility, eval_profile, gaussian_curvature,
                                    profile_from_dict, vanishes_at_origin)

FAMILIES = [Monomial(3.0), Monomial(1.5), MonomialSaturating(2.0, 1.0), ExpSinh(),
            MonomialSum(((1.0, 1.0), (1.0, 2.0)))]


def test_monomial_power_rule():
    assert eval_profile(Monomial(3.0), 2.0) == pytest.approx((8, 12, 12, 6), abs=1e-12)
    assert eval_profile(Monomial(1.5), 1.0) == pytest.approx((1, 1.5, 0.75, -0.375), abs=1e-12)


def test_exp_sinh_matches_taylor_series():
    r = sp.symbols("r")
    series = sp.series(r ** 2 * sp.exp(-r) * sp.sinh(r), r, 0, 9).removeO()
    x = 0.01
    want = [float(sp.diff(series, r, k).subs(r, x)) for k in range(4)]
    got = eval_profile(ExpSinh(), x)
    for g, w in zip(got, want):
        assert abs(g - w) <= 1e-4 * abs(w)


@pytest.mark.parametrize("profile", FAMILIES, ids=lambda p: p.kind)
@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 2.0, 10.0])
def test_derivatives_match_finite_differences(profile, r):
    h = 1e-5 * r
    d = eval_profile(profile, r)
    for k in range(1, 4):
        fd = (profile.derivatives(r + h)[k - 1] - profile.derivatives(r - h)[k - 1]) / (2 * h)
        assert abs(fd - d[k]) <= 1e-4 * max(abs(d[k]), 1e-12)


@pytest.mark.parametrize("profile", FAMILIES, ids=lambda p: p.kind)
def test_sign_and_finiteness_over_wide_range(profile):
    r = np.logspace(-6, 6, 2001)
    d = eval_profile(profile, r)
    assert all(np.all(np.isfinite(v)) for v in d)
    assert np.all(d[1] * d[2] > 0)
    assert vanishes_at_origin(profile)


def test_nonpositive_radius_rejected():
    with pytest.raises(NonPositiveRadius):
        eval_profile(Monomial(3.0), 0.0)
    with pytest.raises(NonPositiveRadius):
        gaussian_curvature(ExpSinh(), -1.0)


@pytest.mark.parametrize("gamma", [1.5, 2.0, 3.0, 5.0])
@pytest.mark.parametrize("r_range", [(1e-3, 1e3), (0.1, 7.0)])
def test_monomial_certificate_exact(gamma, r_range):
    c = certify_admissibility(Monomial(gamma), *r_range, n_samples=10_000)
    assert c.k1_hat == pytest.approx(gamma - 1, abs=1e-10)
    assert c.k2_hat == pytest.approx(gamma - 1, abs=1e-10)
    assert c.k3_hat == pytest.approx(abs(gamma - 2), abs=1e-10)
    assert c.sign_ok and c.admissible


def test_monomial_sum_certificate_matches_dense_sampling():
    prof = MonomialSum(((1.0, 1.0), (1.0, 2.0)))
    cert = certify_admissibility(prof, 1e-3, 1e3, 10_000)
    r = np.logspace(-3, 3, 1_000_000)
    _, p1, p2, p3 = eval_profile(prof, r)
    q = r * p2 / p1
    assert 1 <= cert.k1_hat <= cert.k2_hat <= 2
    assert cert.k1_hat == pytest.approx(q.min(), abs=1e-3)
    assert cert.k2_hat == pytest.approx(q.max(), abs=1e-3)
    assert cert.k3_hat == pytest.approx(np.abs(r * p3 / p2).max(), abs=1e-3)


def test_other_families_certify_finite():
    for prof in (ExpSinh(), MonomialSaturating(2.0, 1.0)):
        c = certify_admissibility(prof, 1e-3, 1e3, 10_000)
        assert c.admissible
        assert all(math.isfinite(v) for v in (c.k1_hat, c.k2_hat, c.k3_hat))


def test_concave_monomial_is_flagged():
    with pytest.raises(SignViolation) as info:
        certify_admissibility(Monomial(0.5))
    assert not info.value.certificate.admissible


def test_gaussian_curvature_values():
    assert gaussian_curvature(Monomial(2.0), 1.0) == pytest.approx(0.16, abs=1e-14)
    ks = [gaussian_curvature(Monomial(3.0), r) for r in (1e-2, 1e-3, 1e-4)]
    assert all(k > 0 for k in ks) and ks[0] > ks[1] > ks[2]


def test_gaussian_curvature_finite_difference():
    prof = ExpSinh()
    h = 1e-4
    f = lambda r: float(prof(r))
    p1 = (f(1 + h) - f(1 - h)) / (2 * h)
    p2 = (f(1 + h) - 2 * f(1) + f(1 - h)) / h ** 2
    want = p1 * p2 / (1 + p1 ** 2) ** 2
    assert gaussian_curvature(prof, 1.0) == pytest.approx(want, rel=1e-6)


def test_profile_round_trip_and_errors():
    for prof in FAMILIES:
        assert profile_from_dict(prof.to_dict()) == prof
    with pytest.raises(InvalidParams):
        profile_from_dict({"kind": "monomial"})
    with pytest.raises(InvalidParams):
        profile_from_dict({"kind": "spline"})
    with pytest.raises(InvalidParams):
        MonomialSaturating(1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.05, 8.0), st.floats(1e-3, 1e3))
def test_monomial_ratio_is_constant(gamma, r):
    _, p1, p2, _ = eval_profile(Monomial(gamma), r)
    assert r * p2 / p1 == pytest.approx(gamma - 1, rel=1e-12)

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxwell_morawetz.background import (
    BackgroundModel,
    DomainError,
    epsilon_weight,
    fi_potential,
    invert_tortoise,
    lapse,
    morawetz_A,
    morawetz_A_prime,
    morawetz_g,
    morawetz_q,
    morawetz_q_prime,
    morawetz_q_second,
    tortoise,
)


def test_lapse_values():
    assert lapse(2.0) == 0.0
    assert lapse(4.0) == pytest.approx(0.5, abs=1e-15)
    assert lapse(3.0, M=1.5) == 0.0
    with pytest.raises(DomainError):
        lapse(1.9)


def test_tortoise_reference_point_and_domain():
    # r* = r at r = 4M for every mass
    for M in (0.5, 1.0, 3.0):
        assert tortoise(4 * M, M) == pytest.approx(4 * M, rel=1e-15)
    with pytest.raises(DomainError):
        tortoise(2.0)
    with pytest.raises(DomainError):
        tortoise(1.0)


def test_tortoise_against_mpmath():
    mpmath.mp.dps = 40
    for r in (2.000001, 2.5, 3.0, 10.0, 1234.5):
        ref = mpmath.mpf(r) + 2 * mpmath.log(mpmath.mpf(r) / 2 - 1)
        assert tortoise(r) == pytest.approx(float(ref), rel=1e-14, abs=1e-13)


@settings(max_examples=300, deadline=None)
# below r* ~ -70 the radius itself rounds to 2M; BackgroundModel keeps r - 2M separately
@given(st.floats(min_value=-60.0, max_value=1e5))
def test_invert_tortoise_roundtrip(rs):
    r = invert_tortoise(rs)
    assert r > 2.0
    # tortoise is ill-conditioned near the horizon: |dr*/dr| r eps = r eps / f
    tol = 1e-12 * max(1.0, abs(rs)) + 4 * np.finfo(float).eps * r / lapse(r)
    assert abs(tortoise(r) - rs) <= tol


def test_background_lapse_resolved_near_horizon():
    # r - 2M = 2x with x + ln x = r*/2 - 1; at r* = -80 x is ~1e-18, below eps of r
    bg = BackgroundModel(r_star_min=-80.0, r_star_max=20.0, n_points=101)
    mpmath.mp.dps = 50
    x_ref = mpmath.lambertw(mpmath.exp(-41)).real  # x e^x = e^(r*/2 - 1)
    assert bg.r_minus_2M[0] == pytest.approx(float(2 * x_ref), rel=1e-13)
    assert bg.lapse[0] == pytest.approx(float(x_ref / (1 + x_ref)), rel=1e-13)
    assert bg.q[0] > 0 and bg.epsilon[0] > 0


def test_morawetz_functions_hand_values():
    # A changes sign at the photon sphere and vanishes on the horizon
    assert morawetz_A(3.0) == 0.0
    assert morawetz_A(2.0) == 0.0
    assert morawetz_A(4.0) == pytest.approx(1 * 2 / 32)
    assert morawetz_A(2.5) < 0
    # q(3M) = 9 * 1 * 3 / (4 * 243) = 1/36
    assert morawetz_q(3.0) == pytest.approx(1 / 36, rel=1e-15)
    assert morawetz_q(2.0) == 0.0
    assert morawetz_g(3.0) == 0.0
    assert morawetz_g(2.0) == 0.0
    # g(4M) = 5/6 * 3 * 1 * 2 / (4 * 1024)
    assert morawetz_g(4.0) == pytest.approx(5 / 6 * 6 / 4096, rel=1e-15)
    assert epsilon_weight(2.0) == 0.0
    assert epsilon_weight(4.0) == pytest.approx(4**-1.5 * math.sqrt(2))


def test_morawetz_q_nonnegative_and_decaying():
    r = np.linspace(2.0, 1e4, 20001)
    q = morawetz_q(r)
    assert np.all(q >= 0)
    # q ~ 9 M^2 / (2 r^3) at large r
    assert q[-1] == pytest.approx(4.5 / r[-1] ** 3, rel=1e-3)


@pytest.mark.parametrize("fn, dfn", [(morawetz_A, morawetz_A_prime), (morawetz_q, morawetz_q_prime),
                                     (morawetz_q_prime, morawetz_q_second)])
def test_derivatives_by_finite_differences(fn, dfn):
    for r in (2.2, 3.0, 5.5, 40.0):
        h = 1e-3 * r
        ref = (fn(r - 2 * h) - 8 * fn(r - h) + 8 * fn(r + h) - fn(r + 2 * h)) / (12 * h)
        assert dfn(r) == pytest.approx(ref, rel=1e-7, abs=1e-10)


def test_q_derivatives_closed_form():
    r = np.linspace(2.0, 50.0, 7)
    expect_dq = 9 / 4 * (-6 / r**4 + 28 / r**5 - 30 / r**6)
    assert np.allclose(morawetz_q_prime(r), expect_dq, rtol=1e-14)


def test_fi_potential():
    assert fi_potential(4.0, 1) == pytest.approx(0.5 * 2 / 16)
    assert fi_potential(2.0, 3) == 0.0
    with pytest.raises(DomainError):
        fi_potential(4.0, 0)
    with pytest.raises(DomainError):
        fi_potential(4.0, 1.5)


def test_background_grid():
    bg = BackgroundModel(r_star_min=-60.0, r_star_max=200.0, n_points=1025)
    assert bg.h == pytest.approx(260 / 1024)
    assert bg.r[0] > 2.0 and bg.lapse[0] < 1e-4
    assert np.all(np.diff(bg.r) > 0)
    assert np.allclose(bg.r + 2 * np.log(bg.r_minus_2M / 2), bg.r_star, rtol=1e-13, atol=1e-12)
    assert np.allclose(bg.lapse, bg.r_minus_2M / bg.r, rtol=1e-14)
    with pytest.raises(ValueError):
        bg.r[3] = 0.0
    fine = bg.refined(2)
    assert fine.n_points == 2049
    assert np.array_equal(fine.r_star[::2], bg.r_star)


def test_background_rejects_shallow_inner_edge():
    with pytest.raises(ValueError, match="lapse"):
        BackgroundModel(r_star_min=-5.0, n_points=65)
    with pytest.raises(DomainError):
        BackgroundModel(mass=-1.0, n_points=65)


def test_mass_scaling():
    bg1 = BackgroundModel(mass=1.0, r_star_min=-60, r_star_max=100, n_points=129)
    bg2 = BackgroundModel(mass=2.0, r_star_min=-120, r_star_max=200, n_points=129)
    assert np.allclose(bg2.r, 2 * bg1.r, rtol=1e-13)
    assert np.allclose(bg2.lapse, bg1.lapse, rtol=1e-10, atol=1e-20)
    # q carries dimension 1/length
    assert np.allclose(bg2.q, bg1.q / 2, rtol=1e-12)
    assert np.allclose(bg2.A, bg1.A, rtol=1e-12)

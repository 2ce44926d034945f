"""Oracle checks for the special-function layer.

Every closed-form implementation is compared against an independent
adaptive-quadrature oracle built directly from the defining integral,
plus asymptotic checkpoints and monotonicity/derivative properties.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from relbgk import specfun

BETAS = (1e-2, 0.5, 1.0, 5.0, 50.0)


def bessel_k_oracle(order: int, beta: float) -> float:
    # K_n(b) = int_0^inf exp(-b cosh t) cosh(n t) dt
    val, _ = integrate.quad(
        lambda t: math.exp(-beta * math.cosh(t)) * math.cosh(order * t),
        0.0, 60.0 / max(beta, 1.0) + 5.0, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def partition_m_oracle(beta: float) -> float:
    # M(b) = 4 pi int_0^inf r^2 exp(-b sqrt(1+r^2)) dr
    val, _ = integrate.quad(
        lambda r: r * r * math.exp(-beta * math.sqrt(1.0 + r * r)),
        0.0, 200.0 / beta + 20.0, epsabs=0.0, epsrel=1e-13, limit=400)
    return 4.0 * math.pi * val


def residual_lambda_oracle(radius: float, beta: float) -> float:
    val, _ = integrate.quad(
        lambda r: r * r * math.exp(-beta * r),
        radius, radius + 200.0 / beta + 20.0, epsabs=0.0, epsrel=1e-13,
        limit=400)
    return 4.0 * math.pi * val


@pytest.mark.parametrize("beta", BETAS)
@pytest.mark.parametrize("order", [1, 2])
def test_bessel_k_vs_quadrature(order, beta):
    assert specfun.bessel_k(order, beta) == pytest.approx(
        bessel_k_oracle(order, beta), rel=1e-10)


@pytest.mark.parametrize("beta", BETAS)
def test_partition_m_vs_quadrature(beta):
    assert specfun.partition_m(beta) == pytest.approx(
        partition_m_oracle(beta), rel=1e-10)


@pytest.mark.parametrize("beta", BETAS)
def test_residual_lambda_vs_quadrature(beta):
    for radius in (0.5, 2.0, 8.0):
        assert specfun.residual_lambda(radius, beta) == pytest.approx(
            residual_lambda_oracle(radius, beta), rel=1e-10)


@pytest.mark.parametrize("beta", BETAS)
def test_residual_phi_closed_form(beta):
    # Phi(R; L, b) = 108 pi (L/b)^3 e^{-x}(x^2+2x+2), x = bR/(3L):
    # re-derive via the integral int_R^inf r^2 exp(-b r/(3L)) dr scaled by 4pi.
    for cap in (1.0, 3.0):
        for radius in (1.0, 6.0):
            beta_eff = beta / (3.0 * cap)
            expect = residual_lambda_oracle(radius, beta_eff)
            assert specfun.residual_phi(radius, cap, beta) == pytest.approx(
                expect, rel=1e-10)


def test_truncated_partition_m_limits():
    # As radius -> inf the truncated normalization recovers M(beta); the
    # deficit equals the closed-form tail up to the q0-weight inequality.
    beta = 1.3
    full = specfun.partition_m(beta)
    assert specfun.truncated_partition_m(beta, 60.0) == pytest.approx(
        full, rel=1e-10)
    deficit = full - specfun.truncated_partition_m(beta, 3.0)
    assert 0.0 < deficit < specfun.residual_lambda(3.0, beta)


# --- asymptotic checkpoints -------------------------------------------------

def test_small_beta_bessel_checkpoints():
    beta = 1e-3
    assert specfun.bessel_k(2, beta) * beta**2 / 2.0 == pytest.approx(
        1.0, rel=1e-2)
    assert specfun.bessel_k(1, beta) * beta == pytest.approx(1.0, rel=1e-2)


def test_small_beta_partition_checkpoint():
    beta = 1e-2
    assert specfun.partition_m(beta) * beta**3 / (8.0 * math.pi) \
        == pytest.approx(1.0, rel=2e-2)


def test_large_beta_partition_checkpoint():
    beta = 50.0
    assert specfun.partition_m(beta) / (
        (2.0 * math.pi / beta) ** 1.5 * math.exp(-beta)) \
        == pytest.approx(1.0, rel=5e-2)


def test_large_beta_ratio_checkpoint():
    # K1/K2 = 1 - 3/(2b) + O(1/b^2); calibrate the constant by oracle.
    for beta in (10.0, 30.0, 100.0):
        err = abs(specfun.ratio_k1k2(beta) - (1.0 - 1.5 / beta))
        assert err <= 2.0 / beta**2


def test_large_beta_psi_checkpoint():
    assert specfun.psi(100.0) - 3.0 / 100.0 == pytest.approx(1.0, rel=2e-2)


# --- structure: monotonicity, derivative, inversion -------------------------

def test_ratio_monotone_and_bounded():
    betas = np.geomspace(1e-3, 700.0, 200)
    vals = np.array([specfun.ratio_k1k2(b) for b in betas])
    assert np.all(np.diff(vals) > 0)
    assert np.all((vals > 0) & (vals < 1))


def test_partition_monotone_decreasing():
    betas = np.geomspace(1e-3, 700.0, 100)
    vals = np.array([specfun.partition_m(b) for b in betas])
    assert np.all(np.diff(vals) < 0)


def test_ratio_derivative_matches_finite_difference():
    for beta in (0.05, 0.7, 3.0, 40.0):
        h = 1e-6 * beta
        fd = (specfun.ratio_k1k2(beta + h)
              - specfun.ratio_k1k2(beta - h)) / (2.0 * h)
        assert specfun.ratio_k1k2_deriv(beta) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("beta", [0.1, 0.9, 2.0, 17.0, 120.0, 500.0])
def test_invert_ratio_roundtrip(beta):
    r = specfun.ratio_k1k2(beta)
    assert specfun.invert_ratio(r) == pytest.approx(beta, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.1, max_value=500.0))
def test_invert_ratio_roundtrip_property(beta):
    assert specfun.invert_ratio(specfun.ratio_k1k2(beta)) == pytest.approx(
        beta, rel=1e-8)


def test_log_partition_consistent():
    for beta in (1e-3, 1.0, 50.0, 650.0):
        assert specfun.log_partition_m(beta) == pytest.approx(
            math.log(specfun.partition_m(beta))
            if beta < 600 else specfun.log_partition_m(beta), rel=1e-12)
    # huge beta: partition_m underflows but the log stays finite
    assert math.isfinite(specfun.log_partition_m(700.0))


def test_cutoff_profile_shape():
    s = np.linspace(0.0, 3.0, 301)
    phi = specfun.cutoff_profile(s)
    assert np.all(phi[s <= 1] == 1.0)
    assert np.all(phi[s >= 2] == 0.0)
    inner = phi[(s > 1) & (s < 2)]
    assert np.all((inner > 0) & (inner < 1))
    assert np.all(np.diff(phi) <= 1e-15)
    # C^2 smoothness at the seams: second one-sided differences stay small
    h = 1e-5
    for edge in (1.0, 2.0):
        lo = specfun.cutoff_profile(np.array([edge - h, edge, edge + h]))
        assert abs(lo[2] - 2.0 * lo[1] + lo[0]) < 1e-8


def test_entropy_bound_cb_decreasing():
    vals = [specfun.entropy_bound_cb(b) for b in (2.0, 3.0, 4.0, 6.0, 8.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v > 0 for v in vals)


def test_domain_errors():
    with pytest.raises(specfun.DomainError):
        specfun.bessel_k(3, 1.0)
    with pytest.raises(specfun.DomainError):
        specfun.bessel_k(1, 0.0)
    with pytest.raises(specfun.DomainError):
        specfun.bessel_k(1, 1e4)
    with pytest.raises(specfun.DomainError):
        specfun.invert_ratio(1.2)
    with pytest.raises(specfun.DomainError):
        specfun.entropy_bound_cb(0.9)
    with pytest.raises(specfun.DomainError):
        specfun.residual_phi(1.0, 0.5, 2.0)

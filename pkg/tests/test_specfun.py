import math

import numpy as np
import pytest
import scipy.special as sp
from scipy.integrate import quad
from hypothesis import given, settings
from hypothesis import strategies as st

from compwave.errors import DivergenceError, DomainError
from compwave.specfun import (EllipticModulus, QuadratureSpec, ScaledIntegral,
                              complete_elliptic_e, complete_elliptic_k, cos2_weighted_k,
                              dn_mc, gauss_tail_over_z2, jacobi_dn, laplace_quadrature)


@pytest.mark.parametrize("sigma", [0.0, 0.1, 0.5, 0.9, 0.999])
def test_complete_integrals_match_scipy(sigma):
    m = sigma * sigma
    assert complete_elliptic_k(sigma) == pytest.approx(sp.ellipk(m), rel=1e-14)
    assert complete_elliptic_e(sigma) == pytest.approx(sp.ellipe(m), rel=1e-14)


def test_k_diverges_at_one():
    with pytest.raises(DivergenceError):
        complete_elliptic_k(1.0)
    assert complete_elliptic_e(1.0) == 1.0


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_modulus_domain(bad):
    with pytest.raises(DomainError):
        EllipticModulus(bad)


@pytest.mark.parametrize("m", [1e-12, 1e-4, 0.1, 0.24, 0.26, 0.7, 1 - 1e-9])
def test_cos2_weighted_k(m):
    if m < 0.1:
        # defining integral; the E/K difference quotient cancels for small m
        ref = quad(lambda v: math.cos(v) ** 2 / math.sqrt(1 - m * math.sin(v) ** 2), 0,
                   math.pi / 2, epsabs=1e-300, epsrel=1e-13)[0]
    else:
        ref = (sp.ellipe(m) - (1 - m) * sp.ellipk(m)) / m
    assert cos2_weighted_k(m) == pytest.approx(ref, rel=1e-12)


def test_cos2_weighted_k_limits():
    assert cos2_weighted_k(0.0) == pytest.approx(math.pi / 4, rel=1e-15)
    assert cos2_weighted_k(1.0, 0.0) == 1.0


@given(u=st.floats(-50, 50), sigma=st.floats(0.0, 0.999))
@settings(max_examples=200, deadline=None)
def test_dn_matches_scipy(u, sigma):
    ref = sp.ellipj(u, sigma * sigma)[2]
    assert jacobi_dn(u, sigma) == pytest.approx(ref, abs=1e-11)


@given(u=st.floats(-20, 20), sigma=st.floats(0.01, 0.99))
@settings(max_examples=100, deadline=None)
def test_dn_bounds_and_parity(u, sigma):
    d = jacobi_dn(u, sigma)
    assert math.sqrt(1 - sigma * sigma) - 1e-14 <= d <= 1 + 1e-14
    assert jacobi_dn(-u, sigma) == pytest.approx(d, abs=1e-14)


def test_dn_soliton_edge_continuity():
    u = np.linspace(-5, 5, 41)
    near = dn_mc(u, 2.5e-6)  # sigma just inside the Landen branch
    assert np.max(np.abs(near - 1 / np.cosh(u))) < 1e-4


@pytest.mark.parametrize("w", [-12.0, -8.1, -7.9, -3.0, -0.5, -0.01])
def test_gauss_tail_over_z2(w):
    # exp(w^2) times the integral of exp(-z^2)/z^2 over (-inf, w], with z = w - s
    scaled = quad(lambda s: math.exp(2 * w * s - s * s) / (w - s) ** 2, 0, math.inf,
                  epsabs=1e-300, epsrel=1e-13)[0]
    assert gauss_tail_over_z2(w) == pytest.approx(math.exp(-w * w) * scaled, rel=1e-11)


@pytest.mark.parametrize("w", [0.0, 1.0])
def test_gauss_tail_domain(w):
    with pytest.raises(DomainError):
        gauss_tail_over_z2(w)


def test_scaled_integral_arithmetic():
    a = ScaledIntegral(800.0, 2.0)
    b = ScaledIntegral(799.0, 3.0)
    assert float((a + b) / a) == pytest.approx(1 + 1.5 * math.exp(-1), rel=1e-15)
    assert float((a * b) / (a * b)) == pytest.approx(1.0)
    assert (a - a).mantissa == 0.0
    with pytest.raises(ZeroDivisionError):
        a / ScaledIntegral(0.0, 0.0)


@given(ls=st.floats(-700, 700), m=st.floats(1e-3, 1e3))
def test_scaled_integral_normalized(ls, m):
    s = ScaledIntegral(ls, m)
    assert 0.1 < abs(s.mantissa) <= 10.0
    assert s.log_abs() == pytest.approx(ls + math.log(m), abs=1e-12)


@pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-6])
def test_laplace_quadrature_gaussian(eps):
    res = laplace_quadrature(lambda y: -(y - 0.3) ** 2 + 5.0, lambda y: 1.0,
                             (-math.inf, math.inf), eps, peak=0.3)
    assert res.log_abs() == pytest.approx(5.0 / eps + 0.5 * math.log(math.pi * eps), rel=1e-13)
    assert len(res.info["cutoffs"]) == 2


def test_laplace_quadrature_rejects_empty_interval():
    with pytest.raises(DomainError):
        laplace_quadrature(lambda y: -y * y, lambda y: 1.0, (1.0, 1.0), 1e-2)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)

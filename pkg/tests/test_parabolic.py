import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from compwave.errors import DegenerateStatesError, DomainError, PreconditionError, SolvabilityError
from compwave.parabolic import (Field, FluxModel, StepStates, apply_l3, kappa_update,
                                rankine_hugoniot, solvability_functional, solve_l3,
                                traveling_wave)

BURGERS = FluxModel.burgers()


@pytest.fixture(scope="module")
def logistic():
    states = StepStates(1.0, 0.0)
    rh = rankine_hugoniot(BURGERS, states)
    return traveling_wave(BURGERS, states, rh), rh


def test_rankine_hugoniot_quadratic():
    rh = rankine_hugoniot(BURGERS, StepStates(1.0, -0.5))
    assert rh.c == pytest.approx(0.25)
    for v in (1.0, -0.5):
        assert BURGERS.phi(v) == pytest.approx(rh.c * v + rh.b)


def test_states_validation():
    with pytest.raises(DegenerateStatesError):
        StepStates(0.5, 0.5)
    with pytest.raises(DomainError):
        StepStates(0.0, 1.0)


def test_nonconvex_rejected_with_point():
    flux = FluxModel.polynomial([0.0, 0.0, 1.0, -1.0])  # phi'' = 2 - 6u
    with pytest.raises(DomainError, match="u = "):
        traveling_wave(flux, StepStates(1.0, 0.0))


@pytest.mark.parametrize("lo,hi", [(0.0, 1.0), (-2.0, 3.0), (0.4, 0.5)])
def test_quadratic_profile_is_logistic(lo, hi):
    states = StepStates(hi, lo)
    prof = traveling_wave(BURGERS, states)
    s = np.linspace(-30, 30, 301)
    k = (hi - lo) / 4
    ref = lo + (hi - lo) * 0.5 * (1 - np.tanh(k * s))
    assert np.max(np.abs(prof(s) - ref)) <= 1e-12 * max(1, abs(hi), abs(lo))
    assert prof.gamma_plus == pytest.approx(2 * k) and prof.gamma_minus == pytest.approx(2 * k)


def test_tail_offsets_keep_relative_precision(logistic):
    prof, _ = logistic
    side, off = prof.offsets(np.array([60.0, -60.0]))
    assert list(side) == [1, -1]
    assert off == pytest.approx(np.exp(-30.0) / (1 + np.exp(-30.0)) * np.ones(2), rel=1e-12)


def test_chebyshev_model_matches_exact_inversion():
    flux = FluxModel.polynomial([0.0, 0.3, 0.5, 0.2])
    prof = traveling_wave(flux, StepStates(1.5, -0.5))
    s = np.linspace(-25, 25, 41)
    _, fast = prof.offsets(s)
    _, exact = prof.offsets(s, exact=True)
    assert np.max(np.abs(fast / exact - 1)) < 1e-12


@pytest.mark.parametrize("coeffs", [[0.0, 0.3, 0.5, 0.2], [0.0, -1.0, 0.0, 0.0, 0.1]])
def test_cubic_flux_profile_ode(coeffs):
    flux = FluxModel.polynomial(coeffs)
    states = StepStates(1.5, -0.5) if len(coeffs) == 4 else StepStates(2.0, 0.5)
    rh = rankine_hugoniot(flux, states)
    prof = traveling_wave(flux, states, rh)
    assert prof(0.0) == pytest.approx(states.mid, abs=1e-14)
    # independent oracle: integrate the profile ODE from sigma = 0
    sol = solve_ivp(lambda s, v: flux.phi(v) - rh.c * v - rh.b, (0.0, 8.0), [states.mid],
                    rtol=1e-12, atol=1e-14, dense_output=True)
    s = np.linspace(0, 8, 17)
    assert np.max(np.abs(prof(s) - sol.sol(s)[0])) < 1e-9
    lam = prof(s)
    assert np.all(np.diff(prof(np.linspace(-20, 20, 81))) <= 0)
    assert np.max(np.abs(prof.derivative(s) - (flux.phi(lam) - rh.c * lam - rh.b))) < 1e-13


def test_kernel_element(logistic):
    prof, rh = logistic
    s = np.linspace(-20, 20, 81)
    r = apply_l3(Field.profile_derivative(prof), prof, BURGERS, rh)(s)
    assert np.max(np.abs(r)) < 1e-9


def test_functional_of_profile_derivative(logistic):
    # F = v0' with zero tails: the functional is -int v0' = nu- - nu+
    prof, rh = logistic
    d = Field.profile_derivative(prof)
    val = solvability_functional(d, Field.zero(), Field.zero(), prof, BURGERS, rh)
    assert val == pytest.approx(1.0, rel=1e-12)
    assert solvability_functional(Field.zero(), Field.zero(), Field.zero(), prof, BURGERS,
                                  rh) == pytest.approx(0.0, abs=1e-14)


def test_solvability_error(logistic):
    prof, rh = logistic
    bump = Field(lambda s: np.exp(-np.asarray(s) ** 2))
    with pytest.raises(SolvabilityError) as exc:
        solve_l3(bump, Field.zero(), Field.zero(), prof, BURGERS, rh)
    assert exc.value.functional == pytest.approx(-math.sqrt(math.pi), rel=1e-10)


def test_tail_precondition(logistic):
    prof, rh = logistic
    with pytest.raises(PreconditionError):
        solvability_functional(Field.constant(1.0), Field.zero(), Field.zero(), prof, BURGERS, rh)


def test_solution_unique_up_to_kernel(logistic):
    prof, rh = logistic
    sech = lambda s: 1 / np.cosh(s)
    w = Field(lambda s: sech(s) + 0.3 * np.tanh(s),
              lambda s: -sech(s) * np.tanh(s) + 0.3 * sech(s) ** 2,
              lambda s: sech(s) * (np.tanh(s) ** 2 - sech(s) ** 2) - 0.6 * sech(s) ** 2 * np.tanh(s))
    F = apply_l3(w, prof, BURGERS, rh)
    v = solve_l3(F, Field.constant(-0.3), Field.constant(0.3), prof, BURGERS, rh)
    s = np.linspace(-12, 12, 49)
    kappa = (v(s) - w(s)) / prof.derivative(s)
    assert np.ptp(kappa) < 1e-7
    assert float(v(0.0)) == pytest.approx(0.0, abs=1e-14)


@given(k=st.floats(-3, 3), h=st.floats(0.1, 2.0))
@settings(max_examples=10, deadline=None)
def test_functional_linearity(logistic, k, h):
    prof, rh = logistic
    g = Field(lambda s: np.exp(-(np.asarray(s) - k) ** 2 / h))
    a = solvability_functional(g, Field.zero(), Field.zero(), prof, BURGERS, rh)
    b = solvability_functional(g * 2.5, Field.zero(), Field.zero(), prof, BURGERS, rh)
    assert b == pytest.approx(2.5 * a, rel=1e-10)


def test_kappa_update():
    kap = kappa_update(lambda t: 2 * t, 1.0, 3.0)
    assert kap(2.0) == pytest.approx(6.0)
    assert np.allclose(kap(np.array([1.0, 3.0])), [3.0, 11.0])
    with pytest.raises(ValueError):
        kappa_update(lambda t: t, 0.0, None)


def test_field_arithmetic():
    f = Field(np.sin, np.cos)
    g = (f + Field.constant(1.0)) * 2.0 - f
    assert float(g(0.3)) == pytest.approx(math.sin(0.3) + 2.0)
    assert float(g.derivative(0.3)) == pytest.approx(math.cos(0.3), rel=1e-10)
    assert float(Field(np.sin).derivative(0.3, 2)) == pytest.approx(-math.sin(0.3), rel=1e-8)

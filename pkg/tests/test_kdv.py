import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from compwave.errors import DomainError
from compwave.kdv import (Y_MAX, Y_MIN, DSWFormula, DSWParams, GPStepSolution, GridStepSolution,
                          StepProfile, build_modulation_table, dsw_approximation,
                          gp_interior_profile, green_property_check, modulation_lhs,
                          modulation_residual, modulation_sigma, renormalized_u0)
from compwave.parabolic import Field


@pytest.fixture(scope="module")
def table():
    return build_modulation_table(64)


def _lhs_scipy(m):
    K, E = sp.ellipk(m), sp.ellipe(m)
    return 1 + m - 2 * m * (1 - m) * K / (E - (1 - m) * K)


@pytest.mark.parametrize("m", [0.2, 0.5, 0.8, 0.99])
def test_modulation_lhs_against_scipy(m):
    assert modulation_lhs(m) == pytest.approx(_lhs_scipy(m), rel=1e-12)


def test_modulation_lhs_endpoints():
    assert modulation_lhs(0.0) == pytest.approx(-3.0, abs=1e-15)
    assert modulation_lhs(1.0, 0.0) == 2.0


@given(y=st.floats(Y_MIN, Y_MAX))
@settings(max_examples=100, deadline=None)
def test_modulation_sigma_solves_equation(y):
    s = modulation_sigma(y)
    assert 0.0 <= s <= 1.0
    assert abs(modulation_residual(s, y)) <= 1e-10


@pytest.mark.parametrize("d", [1e-4, 1e-6, 1e-8])
def test_small_amplitude_edge_series(d):
    # lhs = -3 + 9m/2 + O(m^2) near m = 0, so sigma^2 ~ (2/3)(y + 1)
    s = modulation_sigma(Y_MIN + d)
    assert s * s / d == pytest.approx(2.0 / 3.0, rel=5 * d)


def test_soliton_edge_approach():
    s = modulation_sigma(np.array([Y_MAX - 1e-3, Y_MAX - 1e-6, Y_MAX]))
    assert np.all(np.diff(s) > 0) and s[-1] == 1.0


def test_table_properties(table):
    assert table.sigma[0] == 0.0 and table.sigma[-1] == 1.0
    assert np.all(np.diff(table.sigma) > 0)
    assert np.max(np.abs(table.residuals())) <= 1e-10
    assert table.omega[0] == pytest.approx(-4 / (3 * math.sqrt(6)))
    assert table.rows().shape == (64, 3)


def test_table_rejects_few_nodes():
    with pytest.raises(DomainError):
        build_modulation_table(8)


def test_table_off_node_evaluation(table):
    y = np.linspace(-0.99, 0.66, 17)
    assert np.allclose(table.sigma_at(y), modulation_sigma(y), rtol=0, atol=1e-15)


def test_dsw_params_validation():
    p = DSWParams(1.0, 1e-4, 0.02)
    assert p.mu == pytest.approx(2.0)
    with pytest.raises(DomainError):
        DSWParams(1.0, 1e-4, 0.02, mu=3.0)
    with pytest.raises(DomainError):
        DSWParams(-1.0, 1e-4, 0.02)


def test_step_profile_tanh():
    prof = StepProfile.tanh(2.0)
    assert prof.check() < 1e-12
    assert prof.lam(0.0) == pytest.approx(1.0)


def test_interior_profile_edges(table):
    p = DSWParams(1.0, 1e-4, 0.01)
    # linear edge: sigma = 0 gives a constant 2 dn^2 + 0 = 2
    assert gp_interior_profile(Y_MIN, 1.0, p, table) == pytest.approx(2.0)
    vals = gp_interior_profile(np.linspace(-0.9, 0.6, 200), 1.0, p, table)
    assert np.all(vals <= 3.0 + 1e-12) and np.all(vals >= -1e-12)


def test_formula_outside_fan(table):
    p = DSWParams(1.0, 1e-3, 0.01)
    f = DSWFormula(p, StepProfile.tanh(1.0), table, t=1.0)
    left, right = f(np.array([-2.0, 1.5]))
    assert left == pytest.approx(1.0, abs=1e-12)
    assert right == pytest.approx(0.0, abs=1e-12)
    assert f.tail_bound < 1e-15


def test_formula_matches_renormalized_convolution(table):
    p = DSWParams(1.0, 1e-3, 0.02)
    prof = StepProfile.tanh(1.0)
    z = GPStepSolution(1.0, table)
    for x in (-0.3, 0.6):
        fast = dsw_approximation(x, 1.0, p, prof, table)
        direct = renormalized_u0(x, 1.0, p, prof, z)
        assert fast == pytest.approx(direct, abs=1e-7)


def test_step_solution_regions(table):
    z = GPStepSolution(2.0, table)
    assert z(-5.0, 1.0) == 2.0 and z(5.0, 1.0) == 0.0
    assert z(-1e-9, 0.0) == 2.0
    assert z.breakpoints(3.0) == (-6.0, 4.0)


def test_green_check_exact_for_step():
    # Z = a Theta(-eta): int G f = f(0) exactly
    p = DSWParams(1.0, 1.0, 0.01)
    eta = np.linspace(-20, 20, 40001)
    z = GridStepSolution(eta, np.where(eta < 0, 1.0, 0.0) + np.where(eta == 0, -0.5, 0.0), 0.0)
    f = Field(lambda e: np.exp(-np.asarray(e) ** 2), lambda e: -2 * np.asarray(e) * np.exp(-np.asarray(e) ** 2))
    # trapezoid rule across the jump: O(h^2) error
    assert abs(green_property_check(z, f, 0.0, p, support=(-10, 10))) < 1e-6


def test_grid_solution_time_guard():
    eta = np.linspace(-1, 1, 11)
    z = GridStepSolution(eta, eta ** 2, 0.5)
    assert float(z(0.5)) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        z(0.0, 0.7)

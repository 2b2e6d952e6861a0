from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest

from gkdv_lab import checks, linops
from gkdv_lab.profiles import Grid, base_integrals, soliton_Qc


@pytest.mark.parametrize("m", [2, 3, 4])
def test_spectral_identities(m):
    ids = linops.spectral_identities(m, 1.0, 0.01)
    assert ids["kernel_max"] < 1e-6
    assert ids["generator_rel_l2"] < 1e-6
    assert ids["eigen_rel_l2"] < 1e-6
    assert ids["eigenvalue_exact"] == -linops.eigen_exponent(m, 1.0)
    assert ids["eigenvalue_rayleigh"] == pytest.approx(ids["eigenvalue_exact"], rel=1e-6)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_fourth_order_refinement(m):
    coarse = linops.spectral_identities(m, 1.0, 0.02)
    fine = linops.spectral_identities(m, 1.0, 0.01)
    for key in ("kernel_max", "generator_rel_l2", "eigen_rel_l2"):
        ratio = coarse[key] / fine[key]
        assert 8 < ratio < 32, (key, ratio)


def test_identities_scale_with_c():
    ids = linops.spectral_identities(3, 2.5, 0.01)
    assert ids["generator_rel_l2"] < 1e-6 and ids["eigen_rel_l2"] < 1e-6


def test_eigenvalues():
    assert [linops.eigen_exponent(m, 1.0) for m in (2, 3, 4)] == [1.25, 3.0, 5.25]
    op = linops.LinearizedOperator(3, 1.0, linops.operator_grid(0.02))
    assert linops.inverse_power_eigenvalue(op, -3.5) == pytest.approx(-3.0, abs=1e-6)


def test_cubic_identities_and_refinement():
    fine = linops.cubic_identity_suite(0.01)["residuals"]
    coarse = linops.cubic_identity_suite(0.02)["residuals"]
    assert len(fine) == 7
    for key, val in fine.items():
        assert val < 1e-6, key
        assert 8 < coarse[key] / val < 32, key


@pytest.mark.parametrize("m", [2, 3, 4])
def test_self_adjoint(m):
    assert checks.self_adjointness(m) < 1e-10


def test_apply_rejects_grid_mismatch():
    op = linops.LinearizedOperator(3, 1.0, Grid(10.0, 256))
    with pytest.raises(ValueError):
        linops.apply_L(op, np.zeros(128))
    with pytest.raises(ValueError):
        linops.LinearizedOperator(3, 0.0, Grid(10.0, 256))


def test_derivative_matrices_exact_on_polynomials():
    g = Grid(2.0, 64)
    x = g.x
    D1 = linops.first_derivative_matrix(g.N, g.dx)
    D2 = linops.second_derivative_matrix(g.N, g.dx)
    # fourth-order stencils, including the one-sided edge rows, are exact up to degree 4
    assert np.max(np.abs(D1 @ x ** 4 - 4 * x ** 3)) < 1e-9
    assert np.max(np.abs(D2 @ x ** 4 - 12 * x ** 2)) < 1e-8


def test_tail_integral_closed_form():
    for s in (-3.0, 0.0, 2.5):
        num = float(mp.quad(lambda t: mp.sqrt(2) / mp.cosh(t), [s, mp.inf]))
        assert linops.tail_integral_Q3(s) == pytest.approx(num, rel=1e-13)


@pytest.mark.parametrize("c, lam", [(1.0, 0.6), (0.7, 0.3), (1.6, 0.9)])
def test_cubic_correction(c, lam):
    rep = linops.cubic_Ac_report(c, lam)
    assert rep["ode_residual"] < 1e-4
    assert rep["limit_numeric"] == pytest.approx(rep["limit_closed_form"], abs=1e-4)
    assert rep["limit_closed_form"] == pytest.approx(0.5 * (1 - lam / c) * base_integrals(3)["intQ"], rel=1e-14)
    assert abs(rep["ortho_Q"]) < 1e-6 * rep["ortho_scale"]
    assert abs(rep["ortho_yQ"]) < 1e-6 * rep["ortho_scale"]


def test_cubic_correction_decays_right():
    corr = linops.cubic_Ac(1.0, 0.6, dx=0.05)
    assert abs(corr.profile(30.0)) < 1e-9
    assert abs(corr.profile(20.0)) > abs(corr.profile(30.0))
    with pytest.raises(ValueError):
        linops.cubic_Ac(0.0, 0.6)


@pytest.mark.parametrize("c, lam", [(1.0, 0.6), (0.5, 0.2), (2.0, 0.9)])
def test_two_route_quantities(c, lam):
    for tr in (linops.beta_c(c, lam), linops.Ac_minus_infinity(c, lam)):
        assert tr.agrees(1e-9), tr
    assert linops.beta_c(1.0, 0.6, m=2).agrees(1e-9)


def test_mu_c_and_f3_two_routes():
    assert linops.mu_c(1.0, 0.6).discrepancy < 1e-8
    mc = linops.modulation_coefficients(3, 1.0, 0.6, (1.5, 0.5, 0.0))
    assert mc.f3 == pytest.approx(mc.f3_mu_route, abs=1e-8)
    assert mc.f1 == pytest.approx(-0.17777777777777778, rel=1e-14)


def test_f4_second_coefficient():
    # (1/(8 M[Q])) int y^2 4 sech^4 = (pi^2 - 6) / 36
    comp = linops.f4_components(1.0, 0.6)
    assert comp["f4_2"] == pytest.approx((math.pi ** 2 - 6) / 36, rel=1e-10)
    oracle = float(mp.quad(lambda y: y * y / mp.cosh(y) ** 4, [-mp.inf, mp.inf])) / 4
    assert comp["f4_2"] == pytest.approx(oracle, rel=1e-10)
    assert comp["f4_1"] == pytest.approx(sum(comp["f4_1_terms"].values()))


def test_modulation_coefficients_other_powers():
    mc = linops.modulation_coefficients(2, 1.0, 0.3, (1.5, 0.5, 0.0))
    assert mc.f3 is None and mc.f4 is None
    # xi_2 = 2/3, a'/a = 1/3
    assert mc.f2 == pytest.approx(-(2 / 3) * (0.3 - 1.8) / 3, rel=1e-12)


def test_coercivity():
    vals = linops.coercivity_smoke(3, 1.0)
    assert vals.shape == (200,)
    assert np.all(vals > 0)


def test_potential_profile():
    op = linops.LinearizedOperator(2, 1.0, Grid(10.0, 256))
    assert np.allclose(op.potential, 2 * np.asarray(soliton_Qc(2, 1.0, op.y)))

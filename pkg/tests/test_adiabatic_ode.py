from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkdv_lab import adiabatic_ode as ao
from gkdv_lab import kernels
from gkdv_lab.profiles import ConstantMedium, ModelParams, PotentialSpec
from gkdv_lab.scaling_laws import c_infinity, lambda0, lambda_tilde, mu

SPEC = PotentialSpec(1.0)


def run(m, lam, eps, **kw):
    return ao.integrate(ModelParams(m, lam, eps, SPEC), **kw)


def test_f1_value():
    # p C (C - lam/l0) a'/a at C = 1, P = 0: (2/3)(1 - 1.8)(0.5/1.5)
    assert ao.f1(3, 0.6, 1.0, 0.0, SPEC, 0.05) == pytest.approx(-0.17777777777777778, rel=1e-14)
    assert ao.f1(3, 1 / 3, 1.0, 3.0, SPEC, 0.05) == pytest.approx(0.0, abs=1e-16)


def test_first_integral_rejects_singular_points():
    with pytest.raises(ValueError):
        ao.first_integral(3, 0.6, 1.8, 0.0, SPEC, 0.05)
    with pytest.raises(ValueError):
        ao.first_integral(3, 0.6, 0.0, 0.0, SPEC, 0.05)


def test_first_integral_drift_and_order():
    assert run(3, 0.6, 0.01).drift() < 1e-9
    # at the default step the drift is at round-off, so the order is read off larger steps
    for lam in (0.2, 0.6):
        coarse = run(3, lam, 0.01, dt=1.6)
        fine = run(3, lam, 0.01, dt=0.8)
        assert fine.drift() < 1e-9
        assert 16 / 2 < coarse.drift() / fine.drift() < 16 * 2


@pytest.mark.parametrize("lam", [0.2, 0.38, 0.6, 0.9])
def test_escape_matches_scaling_law(lam):
    r = run(3, lam, 0.01)
    assert r.escaped
    assert r.c_escape == pytest.approx(c_infinity(3, lam).c_inf, abs=1e-3)
    assert (r.t0 is not None) == (lam > lambda_tilde(3))
    assert r.regime == ("Reflection" if lam > lambda_tilde(3) else "Refraction")


def test_reflection_turning_point_and_floor():
    r = run(3, 0.6, 0.02)
    assert r.t0 is not None
    C_t0 = np.interp(r.t0, r.t, r.C)
    assert C_t0 == pytest.approx(0.6, abs=1e-8)
    assert ao.floor_check(r)["holds"]
    chk = ao.escape_bound_check(r)
    assert chk["t0_unique"] and chk["finite"]
    assert chk["escape_ratio"] < 12
    # reflected soliton leaves through the left
    assert r.status == 2 and r.P[-1] < 0


def test_refraction_position_bound():
    r = run(3, 0.2, 0.02)
    chk = ao.position_bound_check(r)
    assert chk["lower_holds_for_t_ge_0"]
    # finite eps: P(0) > 0 while the upper bound vanishes at t = 0, so that side only holds late
    assert chk["P_at_0"] > 0 and not chk["upper_holds_for_t_ge_0"]
    assert 0 < chk["upper_holds_after"] < r.escape_time


def test_lambda0_fixed_point():
    r = run(3, float(lambda0(3)), 0.05)
    assert np.max(np.abs(r.C - 1.0)) < 1e-14


@settings(max_examples=15, deadline=None)
@given(m=st.sampled_from([2, 3, 4]), lam=st.floats(0.02, 0.97))
def test_state_invariants(m, lam):
    if abs(lam - lambda_tilde(m)) < 1e-3:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        r = run(m, lam, 0.05)
    l0 = float(lambda0(m))
    c_inf = c_infinity(m, lam).c_inf
    assert np.all(r.C > 0)
    d = np.diff(r.C)
    if lam <= l0:
        assert np.all(d >= -1e-15)
        assert r.C.min() >= 1.0 and r.C.max() <= c_inf + 1e-3
    else:
        assert np.all(d <= 1e-15)
        assert r.C.max() <= 1.0
        assert r.C.min() >= mu(m, lam) * (1 - 1e-9)


def test_dichotomy_scan_localizes_switch():
    scan = ao.dichotomy_scan(3, 0.01)
    assert len(scan.lams) == 50
    assert scan.consistent
    lo, hi = scan.switch_cell
    assert lo < lambda_tilde(3) < hi
    fin = np.isfinite(scan.c_escape)
    assert np.max(np.abs(scan.c_escape[fin] - scan.c_inf[fin])) < 1e-2


def test_constant_medium_keeps_scaling():
    pr = ModelParams(3, 0.6, 0.05, ConstantMedium(1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        r = ao.integrate(pr, horizon=10.0)
    assert np.all(r.C == 1.0)
    assert r.P[-1] - r.P[0] == pytest.approx(0.4 * (r.t[-1] - r.t[0]), rel=1e-12)


def test_bad_arguments():
    pr = ModelParams(3, 0.6, 0.05, SPEC)
    with pytest.raises(ValueError):
        ao.integrate(pr, dt=0.0)
    with pytest.raises(ValueError):
        ao.integrate(pr, start="nowhere")
    with pytest.raises(ValueError):
        ao.integrate(pr, backend="fortran")


def test_horizon_exhaustion_warns():
    with pytest.warns(RuntimeWarning):
        r = run(3, 0.6, 0.05, horizon=0.0)
    assert not r.escaped and r.warning


def test_asymptotic_start_time():
    assert ao.desk_time(0.05, 0.6, ao.default_kappa(SPEC)) == pytest.approx(450.0)
    r = run(3, 0.3, 0.1, start="asymptotic")
    assert r.T_start == pytest.approx(0.1 ** -1.01 / 0.7)


def test_backends_agree():
    a = run(3, 0.6, 0.02, backend="python")
    b = run(3, 0.6, 0.02)
    assert a.backend == "python"
    assert b.backend == kernels.BACKEND
    assert np.array_equal(a.C, b.C) and np.array_equal(a.P, b.P)


def test_summary_fields():
    s = run(3, 0.6, 0.05).summary()
    assert s["regime"] == "Reflection" and math.isfinite(s["c_escape"])
    assert s["first_integral_drift"] < 1e-6

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkdv_lab import adiabatic_ode as ao
from gkdv_lab import modulation as mo
from gkdv_lab.pde import FieldState
from gkdv_lab.profiles import ConstantMedium, Grid, ModelParams, PotentialSpec, mass_Q, soliton_Qc
from gkdv_lab.scaling_laws import c_infinity

GRID = Grid(100.0, 2048)


@settings(max_examples=60, deadline=None)
@given(
    m=st.sampled_from([2, 3, 4]),
    c=st.floats(0.2, 4.0),
    rho=st.floats(-50.0, 50.0),
    eps=st.floats(0.01, 0.1),
)
def test_fit_round_trip(m, c, rho, eps):
    params = ModelParams(m, 0.5, eps, PotentialSpec(1.0))
    u = mo.ansatz(params, GRID, c, rho)
    s = mo.fit_soliton(FieldState(GRID, u, 0.0), params)
    assert s.valid
    assert abs(s.c_fit - c) / c < 1e-5
    assert abs(s.rho_fit - rho) < GRID.dx / 10
    assert s.defect_H1 >= 0 and s.c_fit > 0


def test_self_fit_constant_medium():
    params = ModelParams(3, 0.5, 0.05, ConstantMedium(1.0))
    u = np.asarray(soliton_Qc(3, 1.0, GRID.x - 5.0))
    s = mo.fit_soliton(FieldState(GRID, u, 0.0), params)
    assert s.c_fit == pytest.approx(1.0, abs=1e-10)
    assert s.rho_fit == pytest.approx(5.0, abs=1e-10)
    assert s.defect_H1 < 1e-8


def test_amplitude_inversion_in_medium():
    # Q_4(x) / a~(0) with a(0) = 1.5 and m = 2
    params = ModelParams(2, 0.3, 0.05, PotentialSpec(1.0))
    u = np.asarray(soliton_Qc(2, 4.0, GRID.x)) / 1.5
    s = mo.fit_soliton(FieldState(GRID, u, 0.0), params)
    assert s.c_fit == pytest.approx(4.0, abs=1e-6)
    assert s.rho_fit == pytest.approx(0.0, abs=1e-10)
    assert s.kappa_used == pytest.approx(1 / 1.5)


def test_defect_after_refraction_uses_reduced_amplitude():
    # far right the medium is 2, so the soliton carries the factor 2^(-1/(m-1))
    m, c = 3, 0.8
    params = ModelParams(m, 0.3, 0.05, PotentialSpec(1.0))
    rho = 900.0
    grid = Grid(1000.0, 2 ** 14)
    w = 1e-3 * np.exp(-((grid.x - rho - 3.0) ** 2))
    u = 2 ** (-1 / (m - 1)) * np.asarray(soliton_Qc(m, c, grid.x - rho)) + w
    s = mo.fit_soliton(FieldState(grid, u, 0.0), params)
    direct = mo._h1(grid, u - 2 ** (-1 / (m - 1)) * np.asarray(soliton_Qc(m, s.c_fit, grid.x - s.rho_fit)))
    assert s.defect_H1 == pytest.approx(direct, rel=1e-6)
    assert s.defect_H1 == pytest.approx(mo._h1(grid, w), rel=0.05)


def test_flat_field_is_invalid():
    params = ModelParams(3, 0.5, 0.05, PotentialSpec(1.0))
    rng = np.random.default_rng(1)
    noise = rng.uniform(-1.0, 1.0, GRID.N)  # max 1 against rms 0.58
    for u in (np.zeros(GRID.N), noise, -np.asarray(soliton_Qc(3, 1.0, GRID.x))):
        s = mo.fit_soliton(FieldState(GRID, u, 2.0), params)
        assert not s.valid and s.t == 2.0


def test_spectral_interpolant_derivatives():
    g = Grid(math.pi, 64)
    f = mo.SpectralInterpolant(g, np.sin(3 * g.x))
    for x in (0.1, 1.234, -2.0):
        assert f(x) == pytest.approx(math.sin(3 * x), abs=1e-13)
        assert f(x, 1) == pytest.approx(3 * math.cos(3 * x), abs=1e-12)
        assert f(x, 2) == pytest.approx(-9 * math.sin(3 * x), abs=1e-11)


def test_locate_peak_window_picks_nearest():
    u = np.asarray(soliton_Qc(3, 1.0, GRID.x - 30.0)) + 0.5 * np.asarray(soliton_Qc(3, 1.0, GRID.x + 20.0))
    assert mo.locate_peak(GRID, u)[0] == pytest.approx(30.0, abs=1e-6)
    assert mo.locate_peak(GRID, u, near=-18.0, half_width=10.0)[0] == pytest.approx(-20.0, abs=1e-6)


def test_track_exact_travelling_wave():
    c, lam = 1.0, 0.6
    params = ModelParams(3, lam, 0.05, ConstantMedium(1.0))
    states = [FieldState(GRID, np.asarray(soliton_Qc(3, c, GRID.x + 20 - (c - lam) * t)), t) for t in np.arange(0, 40, 0.5)]
    samples = mo.track(states, params)
    v = np.array([s.rho_dot for s in samples])
    assert np.all(np.abs(v - (c - lam)) < 0.005 * abs(c - lam))
    rows = mo.track_rows(samples)
    assert len(rows[0]) == len(mo.TRACK_COLUMNS)


def test_tracker_records_breaks():
    params = ModelParams(3, 0.6, 0.05, ConstantMedium(1.0))
    tr = mo.Tracker(params)
    tr(FieldState(GRID, np.asarray(soliton_Qc(3, 1.0, GRID.x)), 0.0))
    tr(FieldState(GRID, np.zeros(GRID.N), 1.0))
    tr(FieldState(GRID, np.asarray(soliton_Qc(3, 1.0, GRID.x - 0.4)), 2.0))
    samples = tr.finish()
    assert tr.breaks == [1.0]
    assert samples[2].rho_dot == pytest.approx(0.2, rel=1e-6)


def test_smooth_velocity_is_exact_on_quadratics():
    t = np.linspace(0, 10, 41)
    rho = 0.3 * t ** 2 - t
    assert np.allclose(mo.smooth_velocity(t, rho), 0.6 * t - 1, atol=1e-10)
    uneven = np.array([0.0, 1.0, 3.0])
    assert np.allclose(mo.smooth_velocity(uneven, 2 * uneven), 2.0)
    assert np.isnan(mo.smooth_velocity([1.0], [1.0])).all()


def ode_samples(run, shift, every=20, dc=0.0):
    t = run.t[::every]
    v = mo.smooth_velocity(t, run.P[::every])
    return [mo.ModulationSample(ti - shift, ci + dc, pi, vi) for ti, ci, pi, vi in zip(t, run.C[::every], run.P[::every], v)]


@pytest.mark.parametrize("lam", [0.3, 0.6])
def test_compare_against_own_trajectory(lam):
    run = ao.integrate(ModelParams(3, lam, 0.05, PotentialSpec(1.0)))
    rep = mo.compare_to_ode(ode_samples(run, 7.0, dc=0.01), run)
    assert rep.shift == pytest.approx(7.0, abs=0.05)
    assert rep.sup_c_error == pytest.approx(0.01, abs=2e-3)
    assert rep.sup_velocity_error < 2e-2
    assert rep.passed and rep.tol == pytest.approx(2 * math.sqrt(0.05))
    if lam > 0.5:
        # turns before the medium centre: aligned at half depth of the turning point
        assert rep.align_level < 0


def test_comparison_tolerance():
    assert mo.comparison_tol(0.0001) == 0.1
    assert mo.comparison_tol(0.05) == pytest.approx(0.4472135954999579)


def test_window_mass_of_exact_soliton():
    c = 0.7
    u = np.asarray(soliton_Qc(3, c, GRID.x - 10.0)) / math.sqrt(2.0)
    # int Q_c^2 / 2 = sqrt(c) M[Q] for m = 3, and the 1/sqrt(2) amplitude halves it
    assert mo.window_mass(GRID, u, 10.0, c) == pytest.approx(0.5 * math.sqrt(c) * mass_Q(3), rel=1e-10)


def test_regime_report_on_synthetic_reflection():
    lam = 0.6
    c_inf = c_infinity(3, lam).c_inf
    samples = [mo.ModulationSample(t, c_inf, -t, c_inf - lam) for t in np.arange(20.0)]
    u = np.asarray(soliton_Qc(3, c_inf, GRID.x + 40.0))
    # the final field sits where the medium is flat; a constant medium stands in for it
    far = ModelParams(3, lam, 0.05, ConstantMedium(1.0))
    rep = mo.regime_report(samples, FieldState(GRID, u, 20.0), far)
    assert rep.regime_measured == "Reflection" == rep.regime_predicted
    assert rep.scaling_error == 0.0 and rep.velocity_error < 1e-15
    assert rep.mass_error < 1e-9
    assert rep.sign_changes == 0
    assert set(rep.as_dict()) >= {"c_plus", "final_velocity", "mass_error", "c_inf"}


def test_measured_regime_and_sign_changes():
    assert mo.measured_regime(0.1) == "Refraction"
    assert mo.measured_regime(-0.1) == "Reflection"
    assert mo.measured_regime(float("nan")) == "Undecided"
    samples = [mo.ModulationSample(t, 1.0, 0.0, v) for t, v in enumerate([0.3, 0.1, 0.0, -0.1, -0.2])]
    assert mo.velocity_sign_changes(samples) == 1


def test_flip_point():
    lams = [0.46, 0.38, 0.42, 0.44]
    labs = ["Reflection", "Refraction", "Refraction", "Reflection"]
    assert mo.flip_point(lams, labs) == pytest.approx((0.42, 0.44, 0.43))
    with pytest.raises(ValueError):
        mo.flip_point([0.4, 0.5, 0.6], ["Refraction", "Reflection", "Refraction"])
    with pytest.raises(ValueError):
        mo.flip_point([0.4, 0.5], ["Reflection", "Refraction"])
    with pytest.raises(ValueError):
        mo.flip_point([0.4, 0.5], ["Refraction", "Undecided"])


def test_predicted_label():
    assert mo.predicted_label(3, 0.38) == "Refraction"
    assert mo.predicted_label(3, 0.6) == "Reflection"
    assert mo.predicted_label(2, 0.1) == "Refraction"

from __future__ import annotations

import math

import numpy as np
import pytest

from gkdv_lab import pde
from gkdv_lab.modulation import fit_soliton
from gkdv_lab.profiles import ConstantMedium, ModelParams, PotentialSpec, soliton_Qc


def travelling(m, c, lam, level, grid, t, x0=0.0):
    amp = level ** (-1.0 / (m - 1))
    return amp * np.asarray(soliton_Qc(m, c, grid.x - x0 - (c - lam) * t))


def rel_h1_error(m, c, lam, level=1.0, L=100.0, N=2048, T=20.0, dt=None, scheme="etdrk4"):
    params = ModelParams(m, lam, 0.05, ConstantMedium(level))
    cfg = pde.SolverConfig(L=L, N=N, dt=dt, scheme=scheme, monitor_every=10 ** 6)
    grid = cfg.grid
    u0 = travelling(m, c, lam, level, grid, 0.0)
    res = pde.run_experiment(params, cfg, u0=u0, horizon=T)
    exact = travelling(m, c, lam, level, grid, res.final.t)
    return pde.h1_norm(grid, res.final.u - exact) / pde.h1_norm(grid, exact), res


@pytest.mark.parametrize("m", [2, 3, 4])
def test_constant_medium_soliton(m):
    err, res = rel_h1_error(m, 1.0, 0.6)
    assert res.final.t == pytest.approx(20.0, abs=res.dt)
    assert err < 1e-3


def test_exact_wave_in_doubled_medium():
    err, _ = rel_h1_error(3, 1.0, 0.2, level=2.0, T=10.0)
    assert err < 1e-3


def test_integrating_factor_scheme_also_converges():
    err, _ = rel_h1_error(3, 1.0, 0.6, T=5.0, dt=0.002, scheme="ifrk4")
    assert err < 1e-3


def test_leftward_speed():
    c, lam, T = 0.3, 0.6, 40.0
    params = ModelParams(3, lam, 0.05, ConstantMedium(1.0))
    cfg = pde.SolverConfig(L=100.0, N=2048, monitor_every=10 ** 6)
    grid = cfg.grid
    u0 = travelling(3, c, lam, 1.0, grid, 0.0, x0=10.0)
    res = pde.run_experiment(params, cfg, u0=u0, horizon=T)
    start = fit_soliton(pde.FieldState(grid, u0, 0.0), params)
    end = fit_soliton(res.final, params)
    v = (end.rho_fit - start.rho_fit) / res.final.t
    assert v < 0
    assert v == pytest.approx(c - lam, rel=0.01)


def test_time_step_convergence():
    coarse, _ = rel_h1_error(3, 1.0, 0.6, N=1024, T=5.0, dt=0.016)
    fine, _ = rel_h1_error(3, 1.0, 0.6, N=1024, T=5.0, dt=0.008)
    assert 8 < coarse / fine < 32


def test_resolution_convergence():
    # spectral in space: doubling N from an under-resolved grid drops the error by far more than 16
    coarse, _ = rel_h1_error(3, 2.0, 0.6, L=50.0, N=128, T=2.0, dt=0.002)
    fine, _ = rel_h1_error(3, 2.0, 0.6, L=50.0, N=256, T=2.0, dt=0.002)
    assert coarse / fine > 16


def test_conservation_in_constant_medium():
    _, res = rel_h1_error(3, 1.0, 0.6, T=10.0)
    M = res.trace.column("M")
    assert np.max(np.abs(M - M[0])) / M[0] < 1e-8
    assert res.trace.energy_drift() < 1e-8
    assert res.trace.l1_drift() < 1e-8


@pytest.fixture(scope="module")
def varying_run():
    # soliton crossing the medium centre at eps = 0.1; the energy drift is time-step limited
    params = ModelParams(3, 0.3, 0.1, PotentialSpec(1.0))
    x0 = pde.start_offset(0.1)
    cfg = pde.SolverConfig(L=abs(x0) + 60.0, N=1024, dt=0.0025, monitor_every=200, sponge_width=40.0)
    return pde.run_experiment(params, cfg, x0=x0, horizon=130.0)


def test_rate_identities(varying_run):
    res = varying_run
    scale = max(float(np.max(res.trace.column("M"))), 1.0)
    resid = res.trace.rate_residuals()
    for name in ("M", "Mhat", "Mscript"):
        assert resid[name] < 1e-6 * scale, (name, resid[name])
    # the medium actually changes the masses
    M = res.trace.column("M")
    assert np.max(M) - np.min(M) > 1e-3
    assert varying_run.centers[-1, 1] > 0


def test_energy_and_l1_in_varying_medium(varying_run):
    assert varying_run.trace.energy_drift() < 1e-6
    assert varying_run.trace.l1_drift() < 1e-8
    assert varying_run.max_edge_fraction < 1e-10


def test_modified_mass_does_not_increase(varying_run):
    # int a^(1/m) u^2 / 2 is non-increasing for lam >= 0 up to time-stepping noise
    assert varying_run.trace.mhat_increase_per_step() < 1e-9


def test_mscript_formula_matches_weighted_rate(varying_run):
    st = varying_run.final
    params = varying_run.params
    ux = np.fft.irfft(1j * st.grid.k * np.fft.rfft(st.u), n=st.grid.N)
    a = pde.mscript_rate_formula(params, st.grid.x, st.u, ux)
    b = pde.weighted_mass_rate(params, st.grid.x, st.u, ux, -1.0)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-14)


def test_manifest_and_trace_columns(varying_run):
    man = varying_run.manifest()
    assert man["N"] == 1024 and man["scheme"] == "etdrk4" and man["x0"] == -81.0
    rows = list(varying_run.trace.csv_rows())
    assert len(rows[0]) == len(pde.TRACE_COLUMNS)


def test_exit_detection():
    params = ModelParams(3, 0.6, 0.05, ConstantMedium(1.0))
    cfg = pde.SolverConfig(L=60.0, N=512, monitor_every=10)
    u0 = travelling(3, 1.0, 0.6, 1.0, cfg.grid, 0.0)
    res = pde.run_experiment(params, cfg, u0=u0, horizon=100.0, x_exit=5.0, check_edges=False)
    assert res.exit_side == 1
    assert res.final.t < 20


def test_rejects_unstable_step():
    params = ModelParams(3, 0.6, 0.05, ConstantMedium(1.0))
    cfg = pde.SolverConfig(L=50.0, N=1024, dt=1.0)
    with pytest.raises(ValueError):
        pde.Solver(params, cfg)
    safe = pde.stable_dt(params, pde.SolverConfig(L=50.0, N=1024))
    assert 0 < safe < 1.0


def test_non_finite_field_aborts():
    params = ModelParams(3, 0.6, 0.05, ConstantMedium(1.0))
    cfg = pde.SolverConfig(L=50.0, N=256, dt=0.01)
    u0 = np.zeros(256)
    u0[10] = np.nan
    with pytest.raises(pde.NumericalAbort):
        pde.run_experiment(params, cfg, u0=u0, horizon=1.0, check_edges=False)


def test_boundary_contamination_aborts():
    params = ModelParams(3, 0.6, 0.05, ConstantMedium(1.0))
    cfg = pde.SolverConfig(L=30.0, N=256, monitor_every=5)
    u0 = travelling(3, 1.0, 0.6, 1.0, cfg.grid, 0.0, x0=20.0)
    with pytest.raises(pde.NumericalAbort):
        pde.run_experiment(params, cfg, u0=u0, horizon=10.0)


def test_config_validation():
    with pytest.raises(ValueError):
        pde.SolverConfig(L=10.0, N=100)
    with pytest.raises(ValueError):
        pde.SolverConfig(L=10.0, N=64, scheme="euler")
    with pytest.raises(ValueError):
        pde.SolverConfig(L=10.0, N=64, sponge_width=10.0)


def test_sponge_profile():
    g = pde.SolverConfig(L=100.0, N=512).grid
    s = pde.sponge_profile(g, 40.0, 0.5)
    assert not np.any(s[np.abs(g.x) <= 60.0])
    assert np.all(s[np.abs(g.x) >= 100.0 - 40.0 / 3] == 0.5)
    inner = g.x >= 0
    assert np.all(np.diff(s[inner]) >= 0)
    assert not np.any(pde.sponge_profile(g, 0.0, 0.5))


def test_sponge_books_balance():
    # a pulse driven into the layer: field mass plus absorbed mass stays constant
    params = ModelParams(3, 0.0, 0.05, ConstantMedium(1.0))
    drift = []
    for dt in (0.01, 0.005):
        cfg = pde.SolverConfig(L=60.0, N=512, dt=dt, sponge_width=30.0, monitor_every=int(0.5 / dt))
        u0 = travelling(3, 1.0, 0.0, 1.0, cfg.grid, 0.0, x0=10.0)
        res = pde.run_experiment(params, cfg, u0=u0, horizon=40.0, check_edges=False)
        M = res.trace.column("M") + res.trace.column("absorbed_M")
        assert res.absorbed[0] > 1.0
        drift.append(np.max(np.abs(M - M[0])) / M[0])
    assert drift[1] < 1e-6
    assert drift[0] / drift[1] > 8


def test_start_offset():
    x0 = pde.start_offset(0.05)
    assert x0 == -162
    assert 0.5 * (1 + math.tanh(0.05 * x0)) < 1e-7


def test_etd_coefficients_small_symbol_limit():
    Q, f1, f2, f3 = pde.etd_coefficients(np.array([0j]), 0.1)
    assert Q[0] == pytest.approx(0.05, rel=1e-12)
    assert f1[0] == pytest.approx(0.1 / 6, rel=1e-12)
    assert f2[0] == pytest.approx(0.1 / 6, rel=1e-12)
    assert f3[0] == pytest.approx(0.1 / 6, rel=1e-12)

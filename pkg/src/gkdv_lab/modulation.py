"""Modulation parameters ``(c(t), rho(t))`` extracted from PDE fields.

The field is modelled as ``u ~ Q_c(x - rho) / a~(eps rho)`` with ``a~ = a^(1/(m-1))``.
The centre is the maximum of the spectral interpolant and the scaling follows from
the amplitude relation ``u_max = c^(1/(m-1)) Q(0) / a~(eps rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import savgol_filter

from .profiles import Grid, ModelParams, mass_Q, soliton_Q, soliton_Qc, tilde_a
from .scaling_laws import Regime, ScalingPrediction, c_infinity, classify_regime

PEAK_CONTRAST = 3.0  # u_max must exceed this multiple of the RMS background
MASS_WINDOW = 20.0  # half-width (in units of c^(-1/2)) of the final-mass window
SAVGOL_WINDOW = 5
SAVGOL_ORDER = 2


@dataclass
class ModulationSample:
    t: float
    c_fit: float
    rho_fit: float
    rho_dot: float = float("nan")
    defect_H1: float = float("nan")
    kappa_used: float = float("nan")
    amplitude: float = float("nan")
    valid: bool = True

    def row(self) -> tuple:
        return (self.t, self.c_fit, self.rho_fit, self.rho_dot, self.defect_H1)


TRACK_COLUMNS = ("t", "c_fit", "rho_fit", "rho_dot", "defect_H1")


def _invalid(t: float) -> ModulationSample:
    nan = float("nan")
    return ModulationSample(t=t, c_fit=nan, rho_fit=nan, valid=False)


class SpectralInterpolant:
    """Trigonometric interpolant of periodic grid data and its first two derivatives."""

    def __init__(self, grid: Grid, u):
        self.grid = grid
        N = grid.N
        uh = np.fft.rfft(u) / N
        w = np.full(uh.shape, 2.0)
        w[0] = 1.0
        w[-1] = 1.0  # Nyquist term appears once
        self.coef = w * uh
        self.k = grid.k

    def __call__(self, x: float, deriv: int = 0) -> float:
        phase = np.exp(1j * self.k * (x + self.grid.L))
        return float(np.real(np.sum(self.coef * (1j * self.k) ** deriv * phase)))


def _window_argmax(grid: Grid, u, near: float | None, half_width: float | None) -> int:
    if near is None or half_width is None:
        return int(np.argmax(u))
    d = np.abs((grid.x - near + grid.L) % (2 * grid.L) - grid.L)
    masked = np.where(d <= half_width, u, -np.inf)
    return int(np.argmax(masked))


def locate_peak(grid: Grid, u, near: float | None = None, half_width: float | None = None):
    """Peak position and height: three-point parabola, then Newton on ``u_x`` of the interpolant."""
    j = _window_argmax(grid, u, near, half_width)
    N = grid.N
    um, u0, up = u[(j - 1) % N], u[j], u[(j + 1) % N]
    denom = um - 2 * u0 + up
    shift = 0.5 * (um - up) / denom if denom < 0 else 0.0
    x = grid.x[j] + float(np.clip(shift, -0.5, 0.5)) * grid.dx
    f = SpectralInterpolant(grid, u)
    for _ in range(8):
        d1, d2 = f(x, 1), f(x, 2)
        if d2 >= 0:
            break
        step = d1 / d2
        x -= float(np.clip(step, -grid.dx, grid.dx))
        if abs(step) < 1e-13 * max(1.0, abs(x)):
            break
    return x, f(x)


def _h1(grid: Grid, w) -> float:
    wx = np.fft.irfft(1j * grid.k * np.fft.rfft(w), n=grid.N)
    return float(np.sqrt(np.sum(w * w + wx * wx) * grid.dx))


def ansatz(params: ModelParams, grid: Grid, c: float, rho: float) -> np.ndarray:
    """``Q_c(x - rho) / a~(eps rho)`` on the grid."""
    amp = float(tilde_a(params.potential, params.m, params.eps * rho))
    return np.asarray(soliton_Qc(params.m, c, grid.x - rho)) / amp


def fit_soliton(state, params: ModelParams, near: float | None = None, half_width: float | None = None) -> ModulationSample:
    """Fit ``(c, rho)`` to one field; invalid when no peak dominates the background."""
    grid, u, t = state.grid, np.asarray(state.u), float(state.t)
    rms = float(np.sqrt(np.mean(u * u)))
    rho, umax = locate_peak(grid, u, near, half_width)
    if not (umax > PEAK_CONTRAST * rms and umax > 0):
        return _invalid(t)
    m = params.m
    at = float(tilde_a(params.potential, m, params.eps * rho))
    c = (at * umax / float(soliton_Q(m, 0.0))) ** (m - 1)
    defect = _h1(grid, u - ansatz(params, grid, c, rho))
    return ModulationSample(t=t, c_fit=c, rho_fit=rho, defect_H1=defect, kappa_used=1.0 / at, amplitude=umax)


def smooth_velocity(t, rho) -> np.ndarray:
    """Local quadratic fit over five samples; plain gradient for short or uneven series."""
    t = np.asarray(t, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if len(t) < 2:
        return np.full(len(t), np.nan)
    steps = np.diff(t)
    uniform = np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12)
    if len(t) >= SAVGOL_WINDOW and uniform:
        return savgol_filter(rho, SAVGOL_WINDOW, SAVGOL_ORDER, deriv=1, delta=steps[0], mode="interp")
    return np.gradient(rho, t)


@dataclass
class Tracker:
    """Online tracker: fits each field near the previous centre and records breaks."""

    params: ModelParams
    samples: list = field(default_factory=list)
    breaks: list = field(default_factory=list)

    def __call__(self, state, row=None) -> ModulationSample:
        grid = state.grid
        prev = next((s for s in reversed(self.samples) if s.valid), None)
        near = prev.rho_fit if prev is not None else None
        s = fit_soliton(state, self.params, near, grid.L / 4 if near is not None else None)
        if not s.valid:
            self.breaks.append(s.t)
        self.samples.append(s)
        return s

    def finish(self) -> list:
        good = [s for s in self.samples if s.valid]
        if good:
            v = smooth_velocity([s.t for s in good], [s.rho_fit for s in good])
            for s, vi in zip(good, v):
                s.rho_dot = float(vi)
        return self.samples


def track(states, params: ModelParams) -> list:
    tr = Tracker(params)
    for st in states:
        tr(st)
    return tr.finish()


def track_rows(samples) -> list:
    return [s.row() for s in samples]


# ---------------------------------------------------------------------------
# comparison with the reduced dynamics

def _first_crossing(t, x, level: float):
    """Earliest upward crossing time of ``x = level`` by linear interpolation, or ``None``."""
    t = np.asarray(t)
    x = np.asarray(x)
    idx = np.nonzero((x[:-1] < level) & (x[1:] >= level))[0]
    if len(idx) == 0:
        return None
    i = idx[0]
    s = (level - x[i]) / (x[i + 1] - x[i])
    return float(t[i] + s * (t[i + 1] - t[i]))


def alignment_level(ode_run, rho_max: float) -> float:
    """Position used to align the time axes.

    The medium midpoint ``x = 0`` when both tracks reach it; otherwise, for a
    turning soliton, the point halfway (in ``a - 1``) to the deeper of the two
    turning points, which is still crossed at a finite speed.
    """
    reach = min(float(np.max(ode_run.P)), rho_max)
    if reach > 0:
        return 0.0
    pr = ode_run.params
    a_turn = float(pr.potential.derivs(pr.eps * reach)[0])
    target = 1.0 + 0.5 * (a_turn - 1.0)
    lo, hi = float(ode_run.P[0]), reach
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pr.potential.derivs(pr.eps * mid)[0] < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class Comparison:
    shift: float
    align_level: float
    sup_c_error: float
    sup_velocity_error: float
    tol: float
    passed: bool
    n_points: int

    def as_dict(self) -> dict:
        return {
            "shift": self.shift,
            "align_level": self.align_level,
            "sup_c_error": self.sup_c_error,
            "sup_velocity_error": self.sup_velocity_error,
            "tol": self.tol,
            "passed": self.passed,
            "n_points": self.n_points,
        }


def comparison_tol(eps: float) -> float:
    return max(0.1, 2.0 * math.sqrt(eps))


def compare_to_ode(samples, ode_run, tol: float | None = None) -> Comparison:
    """Sup-norm gaps ``|c_fit - C|`` and ``|rho_dot - (C - lam)|`` after time alignment."""
    good = [s for s in samples if s.valid]
    t = np.array([s.t for s in good])
    c = np.array([s.c_fit for s in good])
    rho = np.array([s.rho_fit for s in good])
    v = np.array([s.rho_dot for s in good])
    pr = ode_run.params
    level = alignment_level(ode_run, float(np.max(rho)))
    t_pde = _first_crossing(t, rho, level)
    t_ode = _first_crossing(ode_run.t, ode_run.P, level)
    if t_pde is None or t_ode is None:
        raise ValueError("tracks do not share the alignment point")
    shift = t_ode - t_pde
    ts = t + shift
    inside = (ts >= ode_run.t[0]) & (ts <= ode_run.t[-1]) & np.isfinite(v)
    C = np.interp(ts[inside], ode_run.t, ode_run.C)
    dc = float(np.max(np.abs(c[inside] - C))) if inside.any() else float("nan")
    dv = float(np.max(np.abs(v[inside] - (C - pr.lam)))) if inside.any() else float("nan")
    tol = comparison_tol(pr.eps) if tol is None else tol
    return Comparison(
        shift=shift,
        align_level=level,
        sup_c_error=dc,
        sup_velocity_error=dv,
        tol=tol,
        passed=bool(dc <= tol),
        n_points=int(inside.sum()),
    )


# ---------------------------------------------------------------------------
# final state

def window_mass(grid: Grid, u, rho: float, c: float, width: float = MASS_WINDOW) -> float:
    """``1/2 int u^2`` over ``|x - rho| <= width / sqrt(c)`` (periodic distance)."""
    d = np.abs((grid.x - rho + grid.L) % (2 * grid.L) - grid.L)
    sel = d <= width / math.sqrt(c)
    return 0.5 * float(np.sum(u[sel] ** 2)) * grid.dx


def late_average(samples, key: str, count: int = 10) -> float:
    vals = [getattr(s, key) for s in samples if s.valid and math.isfinite(getattr(s, key))]
    if not vals:
        return float("nan")
    return float(np.median(vals[-count:]))


@dataclass
class RegimeReport:
    regime_measured: str
    c_plus: float
    final_velocity: float
    predicted: ScalingPrediction
    velocity_error: float
    scaling_error: float
    defect_final: float
    final_mass: float
    final_mass_predicted: float
    mass_error: float
    sign_changes: int
    comparison: Comparison | None = None

    @property
    def regime_predicted(self) -> str:
        return "Refraction" if self.predicted.regime.is_refraction else self.predicted.regime.value

    def as_dict(self) -> dict:
        d = {
            "regime_measured": self.regime_measured,
            "regime_predicted": self.regime_predicted,
            "c_plus": self.c_plus,
            "final_velocity": self.final_velocity,
            "c_inf": self.predicted.c_inf,
            "predicted_velocity": self.predicted.final_velocity,
            "velocity_error": self.velocity_error,
            "scaling_error": self.scaling_error,
            "defect_final": self.defect_final,
            "final_mass": self.final_mass,
            "final_mass_predicted": self.final_mass_predicted,
            "mass_error": self.mass_error,
            "velocity_sign_changes": self.sign_changes,
        }
        if self.comparison is not None:
            d.update({f"ode_{k}": v for k, v in self.comparison.as_dict().items()})
        return d


def measured_regime(velocity: float) -> str:
    if not math.isfinite(velocity) or velocity == 0.0:
        return "Undecided"
    return "Refraction" if velocity > 0 else "Reflection"


def velocity_sign_changes(samples) -> int:
    v = np.array([s.rho_dot for s in samples if s.valid and math.isfinite(s.rho_dot)])
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s)))


def regime_report(samples, final_state, params: ModelParams, ode_run=None, late: int = 10) -> RegimeReport:
    """Final-state measurements against the algebraic predictions."""
    pred = c_infinity(params.m, params.lam)
    c_plus = late_average(samples, "c_fit", late)
    v_end = late_average(samples, "rho_dot", late)
    last = fit_soliton(final_state, params)
    if last.valid:
        mass = window_mass(final_state.grid, final_state.u, last.rho_fit, last.c_fit)
        defect = last.defect_H1
    else:
        mass = defect = float("nan")
    if pred.regime is Regime.CRITICAL:
        mass_pred = float("nan")
    else:
        mass_pred = pred.final_mass_ratio * mass_Q(params.m)
    comp = compare_to_ode(samples, ode_run) if ode_run is not None else None
    return RegimeReport(
        regime_measured=measured_regime(v_end),
        c_plus=c_plus,
        final_velocity=v_end,
        predicted=pred,
        velocity_error=abs(v_end - pred.final_velocity),
        scaling_error=abs(c_plus - pred.c_inf),
        defect_final=defect,
        final_mass=mass,
        final_mass_predicted=mass_pred,
        mass_error=abs(mass - mass_pred) / mass_pred if mass_pred else float("nan"),
        sign_changes=velocity_sign_changes(samples),
        comparison=comp,
    )


def flip_point(lams, regimes) -> tuple[float, float, float]:
    """Bracket ``(lo, hi)`` and midpoint of the refraction-to-reflection switch.

    ``regimes`` are measured labels sorted with ``lams``; requires a single switch.
    """
    order = np.argsort(lams)
    lams = np.asarray(lams, dtype=float)[order]
    labs = [regimes[i] for i in order]
    refl = [lab == "Reflection" for lab in labs]
    if any(lab not in ("Refraction", "Reflection") for lab in labs):
        raise ValueError("undecided runs in the scan")
    switches = [i for i in range(len(refl) - 1) if refl[i] != refl[i + 1]]
    if len(switches) != 1 or refl[switches[0]]:
        raise ValueError(f"expected one refraction-to-reflection switch, got labels {labs}")
    i = switches[0]
    return float(lams[i]), float(lams[i + 1]), 0.5 * float(lams[i] + lams[i + 1])


def predicted_label(m: int, lam: float) -> str:
    reg = classify_regime(m, lam)
    return "Refraction" if reg.is_refraction else reg.value


__all__ = [
    "ModulationSample",
    "TRACK_COLUMNS",
    "SpectralInterpolant",
    "locate_peak",
    "ansatz",
    "fit_soliton",
    "smooth_velocity",
    "Tracker",
    "track",
    "track_rows",
    "compare_to_ode",
    "comparison_tol",
    "Comparison",
    "window_mass",
    "RegimeReport",
    "regime_report",
    "measured_regime",
    "flip_point",
    "predicted_label",
]

"""Adiabatic dynamics of the soliton parameters.

The reduced system is::

    C' = eps * f1(C, P),    f1 = p C (C - lam/l0) a'(eps P) / a(eps P)
    P' = C - lam

started from ``C = 1``, ``P = -(1 - lam) T`` at ``t = -T``. Along exact
trajectories ``l0 ln C + (1 - l0) ln|C - lam/l0| - p ln a(eps P)`` is constant.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .profiles import ConstantMedium, ModelParams, PotentialSpec
from .scaling_laws import c_infinity, lambda_tilde, mu

DEFAULT_KAPPA_GAMMA = 9.0  # T_start = kappa / (eps (1 - lam)) with kappa = 9 / gamma
DEFAULT_HORIZON_FACTOR = 12.0


def _constants(m: int):
    from .scaling_laws import lambda0, p

    return float(lambda0(m)), float(p(m))


def _medium_kind(spec) -> tuple[int, float]:
    if isinstance(spec, PotentialSpec):
        return 0, spec.gamma
    if isinstance(spec, ConstantMedium):
        return 1, 1.0
    raise TypeError(f"unsupported medium {spec!r}")


def f1(m: int, lam: float, C, P, spec, eps: float):
    """Scaling drift ``p C (C - lam/l0) a'/a`` evaluated at ``eps P``."""
    l0, pp = _constants(m)
    a, a1, _, _ = spec.derivs(eps * np.asarray(P, dtype=float))
    out = pp * np.asarray(C) * (np.asarray(C) - lam / l0) * a1 / a
    return float(out) if np.ndim(out) == 0 else out


def first_integral(m: int, lam: float, C, P, spec, eps: float):
    l0, pp = _constants(m)
    C = np.asarray(C, dtype=float)
    if np.any(C <= 0) or np.any(C == lam / l0):
        raise ValueError("first integral is undefined on C = 0 and C = lam/l0")
    a = spec.derivs(eps * np.asarray(P, dtype=float))[0]
    out = l0 * np.log(C) + (1.0 - l0) * np.log(np.abs(C - lam / l0)) - pp * np.log(a)
    return float(out) if np.ndim(out) == 0 else out


def asymptotic_start_time(eps: float, lam: float) -> float:
    """Start time ``eps^(-1 - 1/100) / (1 - lam)`` used in the asymptotic theory."""
    return eps ** (-1.01) / (1.0 - lam)


def desk_time(eps: float, lam: float, kappa: float) -> float:
    return kappa / (eps * (1.0 - lam))


def default_kappa(spec) -> float:
    gamma = getattr(spec, "gamma", 1.0)
    return DEFAULT_KAPPA_GAMMA / gamma


def default_dt(eps: float) -> float:
    return min(0.01 / eps, 0.05)


@dataclass
class OdeRun:
    params: ModelParams
    t: np.ndarray
    C: np.ndarray
    P: np.ndarray
    dt: float
    T_start: float
    p_exit: float
    status: int
    t0: float | None = None
    escape_time: float | None = None
    c_escape: float = float("nan")
    warning: str | None = None
    backend: str = kernels.BACKEND
    extras: dict = field(default_factory=dict)

    @property
    def escaped(self) -> bool:
        return self.escape_time is not None

    @property
    def regime(self) -> str:
        if self.t0 is not None:
            return "Reflection"
        return "Refraction"

    @property
    def on_fixed_line(self) -> bool:
        """Started on ``C = lam/l0`` (``lam = l0``), where the first integral is undefined."""
        l0, _ = _constants(self.params.m)
        return bool(self.C[0] == self.params.lam / l0)

    def first_integral(self) -> np.ndarray:
        pr = self.params
        if self.on_fixed_line:
            return np.full(len(self.C), np.nan)
        return first_integral(pr.m, pr.lam, self.C, self.P, pr.potential, pr.eps)

    def drift(self) -> float:
        """Largest deviation of the first integral; of ``C`` itself on the fixed line."""
        if self.on_fixed_line:
            return float(np.max(np.abs(self.C - self.C[0])))
        I = self.first_integral()
        return float(np.max(np.abs(I - I[0])))

    def medium(self) -> np.ndarray:
        pr = self.params
        return pr.potential.derivs(pr.eps * self.P)[0]

    def csv_rows(self):
        I = self.first_integral()
        a = self.medium()
        for row in zip(self.t, self.C, self.P, I, a):
            yield row

    def summary(self) -> dict:
        pr = self.params
        return {
            "m": pr.m,
            "lambda": pr.lam,
            "eps": pr.eps,
            "dt": self.dt,
            "T_start": self.T_start,
            "p_exit": self.p_exit,
            "steps": int(len(self.t) - 1),
            "status": self.status,
            "regime": self.regime,
            "t0": self.t0,
            "escape_time": self.escape_time,
            "c_escape": self.c_escape,
            "first_integral_drift": self.drift(),
            "warning": self.warning,
            "backend": self.backend,
        }


def _rhs(params: ModelParams, C, P):
    return params.eps * f1(params.m, params.lam, C, P, params.potential, params.eps), C - params.lam


def _hermite(t0, t1, y0, y1, d0, d1):
    h = t1 - t0

    def val(t):
        s = (t - t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1

    return val


def _refine(run_t, Y, dY, i, target):
    """Crossing time of ``Y = target`` inside step ``[i, i+1]`` by bracketed secant on the Hermite cubic."""
    f = _hermite(run_t[i], run_t[i + 1], Y[i] - target, Y[i + 1] - target, dY[i], dY[i + 1])
    a, b = run_t[i], run_t[i + 1]
    if f(a) == 0.0:
        return a
    if f(b) == 0.0:
        return b
    return brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def integrate(
    params: ModelParams,
    dt: float | None = None,
    horizon: float | None = None,
    kappa: float | None = None,
    start: str = "desk",
    backend: str | None = None,
) -> OdeRun:
    """Fixed-step RK4 from ``t = -T_start`` until escape or ``t = horizon``.

    ``start='desk'`` uses ``T_start = kappa/(eps (1 - lam))``; ``start='asymptotic'`` uses
    :func:`asymptotic_start_time`. ``horizon`` is the final time and defaults to 12 T_start.
    """
    m, lam, eps, spec = params.m, params.lam, params.eps, params.potential
    l0, pp = _constants(m)
    if dt is None:
        dt = default_dt(eps)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if start == "desk":
        T = desk_time(eps, lam, default_kappa(spec) if kappa is None else kappa)
    elif start == "asymptotic":
        T = asymptotic_start_time(eps, lam)
    else:
        raise ValueError(f"unknown start mode {start!r}")
    if horizon is None:
        horizon = DEFAULT_HORIZON_FACTOR * T
    if not horizon > -T:
        raise ValueError("horizon must lie after the start time")
    nmax = int(math.ceil((horizon + T) / dt))
    p_exit = (1.0 - lam) * T
    kind, gamma = _medium_kind(spec)
    flow = kernels.rk4_flow
    used = kernels.BACKEND
    if backend == "python":
        flow, used = kernels.python_rk4_flow, "python"
    elif backend not in (None, "cython"):
        raise ValueError(f"unknown backend {backend!r}")
    t, C, P, n, status = flow(l0, pp, lam, eps, gamma, kind, 1.0, -p_exit, -T, dt, nmax, p_exit)
    run = OdeRun(params=params, t=np.asarray(t), C=np.asarray(C), P=np.asarray(P), dt=dt,
                 T_start=T, p_exit=p_exit, status=int(status), backend=used)
    _locate_events(run)
    return run


def _locate_events(run: OdeRun) -> None:
    pr = run.params
    dC, dP = _rhs(pr, run.C, run.P)
    below = np.nonzero(run.C < pr.lam)[0]
    if below.size and run.C[0] >= pr.lam:
        i = int(below[0]) - 1
        run.t0 = float(_refine(run.t, run.C, dC, i, pr.lam))
    if run.status == 0:
        run.c_escape = float(run.C[-1])
        run.warning = "horizon exhausted before escape"
        warnings.warn(f"ODE run for lambda={pr.lam} reached the horizon without escaping", RuntimeWarning, stacklevel=3)
        return
    target = run.p_exit if run.status == 1 else -run.p_exit
    i = len(run.t) - 2
    te = float(_refine(run.t, run.P, dP, i, target))
    run.escape_time = te
    fC = _hermite(run.t[i], run.t[i + 1], run.C[i], run.C[i + 1], dC[i], dC[i + 1])
    run.c_escape = float(fC(te))


def escape_bound_check(run: OdeRun) -> dict:
    """Event times relative to the start scale, plus the turning position ``eps P(t0)``."""
    pr = run.params
    out = {
        "T_start": run.T_start,
        "t0_ratio": None if run.t0 is None else run.t0 / run.T_start,
        "escape_ratio": None if run.escape_time is None else run.escape_time / run.T_start,
        "eps_P_t0": None,
        "t0_unique": None,
    }
    finite = True
    if run.t0 is not None:
        i = int(np.searchsorted(run.t, run.t0))
        out["eps_P_t0"] = float(pr.eps * np.interp(run.t0, run.t, run.P))
        s = np.sign(run.C - pr.lam)
        s = s[s != 0]
        out["t0_unique"] = bool(np.count_nonzero(np.diff(s)) == 1)
        finite &= math.isfinite(out["t0_ratio"]) and i < len(run.t)
    if run.escape_time is not None:
        finite &= math.isfinite(out["escape_ratio"])
    out["finite"] = bool(finite)
    return out


def position_bound_check(run: OdeRun) -> dict:
    """For ``lam <= l0``: ``(1 - lam) t <= P(t) <= 1.01 (c_inf - lam) t`` checked for ``t >= 0``.

    Both sides are reported separately. ``P(0)`` is positive at finite ``eps`` while the
    upper bound vanishes at ``t = 0``, so the upper side is also reported as the time
    after which it holds up to the end of the run. The negative-time behaviour is only logged.
    """
    pr = run.params
    c_inf = c_infinity(pr.m, pr.lam).c_inf
    pos = run.t >= 0
    neg = ~pos
    lower = (1.0 - pr.lam) * run.t
    upper = 1.01 * (c_inf - pr.lam) * run.t
    ok_lower = bool(np.all(run.P[pos] >= lower[pos] - 1e-9))
    above = pos & (run.P > upper + 1e-9)
    ok_upper = not bool(np.any(above))
    if ok_upper:
        upper_after = 0.0
    else:
        last = int(np.nonzero(above)[0][-1])
        upper_after = None if last == len(run.t) - 1 else float(run.t[last + 1])
    return {
        "lower_holds_for_t_ge_0": ok_lower,
        "upper_holds_for_t_ge_0": ok_upper,
        "upper_holds_after": upper_after,
        "P_at_0": float(np.interp(0.0, run.t, run.P)) if run.t[0] <= 0 <= run.t[-1] else None,
        "holds_for_t_ge_0": ok_lower and ok_upper,
        "negative_time_lower_violations": int(np.count_nonzero(run.P[neg] < lower[neg] - 1e-9)),
        "negative_time_upper_violations": int(np.count_nonzero(run.P[neg] > upper[neg] + 1e-9)),
    }


def floor_check(run: OdeRun) -> dict:
    pr = run.params
    floor = mu(pr.m, pr.lam)
    return {"min_C": float(run.C.min()), "mu": floor, "holds": bool(run.C.min() >= floor * (1 - 1e-6))}


@dataclass(frozen=True)
class DichotomyScan:
    lams: np.ndarray
    has_t0: np.ndarray
    c_escape: np.ndarray
    c_inf: np.ndarray
    lambda_tilde: float

    @property
    def switch_cell(self) -> tuple[float, float] | None:
        """Grid cell in which ``has_t0`` flips from False to True (single flip expected)."""
        flips = np.nonzero(np.diff(self.has_t0.astype(int)))[0]
        if flips.size != 1:
            return None
        i = int(flips[0])
        return float(self.lams[i]), float(self.lams[i + 1])

    @property
    def consistent(self) -> bool:
        return bool(np.all(self.has_t0 == (self.lams > self.lambda_tilde)))


def dichotomy_scan(m: int, eps: float, lams=None, spec=None, dt=None, horizon_factor: float = 6.0) -> DichotomyScan:
    """ODE-level regime over a lambda grid; 50 points on ``(l0 + 0.01, 0.99)`` by default."""
    l0, _ = _constants(m)
    if lams is None:
        lams = np.linspace(l0 + 0.01, 0.99, 50)
    spec = spec or PotentialSpec()
    has, ce, ci = [], [], []
    for lam in lams:
        pr = ModelParams(m, float(lam), eps, spec)
        T = desk_time(eps, lam, default_kappa(spec))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            run = integrate(pr, dt=dt, horizon=horizon_factor * T)
        has.append(run.t0 is not None)
        ce.append(run.c_escape)
        ci.append(c_infinity(m, float(lam)).c_inf)
    return DichotomyScan(np.asarray(lams, dtype=float), np.array(has), np.array(ce), np.array(ci), lambda_tilde(m))

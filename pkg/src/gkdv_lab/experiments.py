"""PDE runs tied to the reduced dynamics and the algebraic laws.

A run launches ``Q(x - x0)`` deep in the ``a = 1`` region, tracks the soliton,
and stops once its centre leaves ``[-x_exit, x_exit]`` moving outwards.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import adiabatic_ode, modulation
from .pde import SolverConfig, run_experiment, start_offset
from .profiles import ModelParams, PotentialSpec

TARGET_DX = 0.22
SPONGE_WIDTH = 40.0
DEFAULT_DT = 0.003


@dataclass(frozen=True)
class PdeSetup:
    """Every numerical knob of a modulated-soliton run."""

    L: float
    N: int
    dt: float
    x0: float
    x_exit: float
    horizon: float
    sponge_width: float = SPONGE_WIDTH
    sponge_strength: float = 0.5
    monitor_every: int = 100
    scheme: str = "etdrk4"

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            L=self.L,
            N=self.N,
            dt=self.dt,
            scheme=self.scheme,
            monitor_every=self.monitor_every,
            sponge_width=self.sponge_width,
            sponge_strength=self.sponge_strength,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def default_setup(params: ModelParams, dt: float = DEFAULT_DT) -> PdeSetup:
    """Domain sized from the launch point: ``L = |x0| + 60`` and ``dx`` close to 0.22."""
    gamma = getattr(params.potential, "gamma", 1.0)
    x0 = start_offset(params.eps, gamma)
    L = float(abs(x0) + 60)
    N = 2 ** int(math.ceil(math.log2(2 * L / TARGET_DX)))
    x_exit = 4.0 / (gamma * params.eps)
    horizon = 10.0 * abs(x0) / (1.0 - params.lam)
    every = max(1, int(round(0.5 / dt)))
    return PdeSetup(L=L, N=N, dt=dt, x0=float(x0), x_exit=x_exit, horizon=horizon, monitor_every=every)


@dataclass
class CompareResult:
    params: ModelParams
    setup: PdeSetup
    samples: list
    report: modulation.RegimeReport
    ode: adiabatic_ode.OdeRun
    pde: object

    def summary(self) -> dict:
        pr = self.params
        d = {"m": pr.m, "lambda": pr.lam, "eps": pr.eps}
        d.update(self.report.as_dict())
        d.update(
            {
                "exit_side": self.pde.exit_side,
                "t_final": self.pde.final.t,
                "energy_drift": self.pde.trace.energy_drift(),
                "l1_drift": self.pde.trace.l1_drift(),
                "max_edge_fraction": self.pde.max_edge_fraction,
            }
        )
        d.update({f"rate_residual_{k}": v for k, v in self.pde.trace.rate_residuals().items()})
        return d


def run_compare(params: ModelParams, setup: PdeSetup | None = None, ode_dt: float | None = None) -> CompareResult:
    """PDE run, tracked fit, adiabatic ODE and algebraic prediction in one report."""
    setup = setup or default_setup(params)
    tracker = modulation.Tracker(params)
    res = run_experiment(
        params,
        setup.solver_config(),
        x0=setup.x0,
        horizon=setup.horizon,
        x_exit=setup.x_exit,
        on_monitor=tracker,
    )
    samples = tracker.finish()
    ode = adiabatic_ode.integrate(params, dt=ode_dt)
    report = modulation.regime_report(samples, res.final, params, ode_run=ode)
    return CompareResult(params=params, setup=setup, samples=samples, report=report, ode=ode, pde=res)


def _scan_one(args) -> dict:
    m, lam, eps, gamma, dt = args
    params = ModelParams(m, lam, eps, PotentialSpec(gamma))
    out = run_compare(params, default_setup(params, dt))
    return out.summary()


def scan_rows(m: int, lams, eps: float, gamma: float = 1.0, dt: float = DEFAULT_DT, workers: int = 1) -> list[dict]:
    """Run ``run_compare`` over a lambda grid; output ordered by lambda whatever the worker count."""
    lams = sorted(float(v) for v in lams)
    jobs = [(m, lam, eps, gamma, dt) for lam in lams]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_one, jobs))
    return [_scan_one(j) for j in jobs]


SCAN_COLUMNS = ("lambda", "regime_predicted", "regime_measured", "c_inf", "c_plus", "final_velocity")


@dataclass
class FlipSearch:
    eps: float
    bracket: tuple[float, float]
    estimate: float
    rows: list

    def as_dict(self) -> dict:
        return {"eps": self.eps, "bracket": list(self.bracket), "estimate": self.estimate, "runs": self.rows}


def flip_search(
    m: int,
    eps: float,
    lo: float,
    hi: float,
    depth: int = 5,
    gamma: float = 1.0,
    dt: float = DEFAULT_DT,
) -> FlipSearch:
    """Bisect the measured regime switch on ``[lo, hi]``: ``lo`` must refract and ``hi`` reflect."""
    rows = scan_rows(m, [lo, hi], eps, gamma, dt)
    labels = [r["regime_measured"] for r in rows]
    if labels != ["Refraction", "Reflection"]:
        raise ValueError(f"bracket [{lo}, {hi}] does not straddle the switch: {labels}")
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        row = _scan_one((m, mid, eps, gamma, dt))
        rows.append(row)
        if row["regime_measured"] == "Refraction":
            lo = mid
        elif row["regime_measured"] == "Reflection":
            hi = mid
        else:
            break
    rows.sort(key=lambda r: r["lambda"])
    return FlipSearch(eps=eps, bracket=(lo, hi), estimate=0.5 * (lo + hi), rows=rows)


def defect_scaling(eps_values, m: int = 3, lam: float = 0.3, gamma: float = 1.0, dt: float = DEFAULT_DT) -> dict:
    """Final defect ``||w+||_H1`` against ``eps`` with its log-log slope."""
    eps_values = sorted(float(e) for e in eps_values)
    defects = []
    for eps in eps_values:
        params = ModelParams(m, lam, eps, PotentialSpec(gamma))
        defects.append(run_compare(params, default_setup(params, dt)).report.defect_final)
    slope = float(np.polyfit(np.log(eps_values), np.log(defects), 1)[0])
    return {"eps": eps_values, "defect": defects, "slope": slope}


def with_dt(setup: PdeSetup, dt: float) -> PdeSetup:
    return replace(setup, dt=dt, monitor_every=max(1, int(round(0.5 / dt))))


__all__ = [
    "PdeSetup",
    "default_setup",
    "CompareResult",
    "run_compare",
    "scan_rows",
    "SCAN_COLUMNS",
    "FlipSearch",
    "flip_search",
    "defect_scaling",
    "with_dt",
]

"""Algebraic scaling laws from mass and energy balance.

All three branches of the limiting scaling ``c_inf`` solve the same equation::

    g(c) := c^l0 * ((lam - l0 c) / (lam - l0))^(1 - l0) = K

with ``K = 2^p`` when the soliton is refracted into the ``a = 2`` region and
``K = 1`` when it is reflected back into ``a = 1``. Only the bracket changes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .profiles import Nonlinearity, base_integrals, check_m

CRITICAL_TOL = 1e-9
BISECT_TOL = 1e-12
_NUDGE = 1e-14


class Regime(str, enum.Enum):
    REFRACTION_LARGE = "RefractionLarge"
    REFRACTION_SMALL = "RefractionSmall"
    CRITICAL = "Critical"
    REFLECTION = "Reflection"

    @property
    def is_refraction(self) -> bool:
        return self in (Regime.REFRACTION_LARGE, Regime.REFRACTION_SMALL)


def lambda0(m: int) -> Fraction:
    return Nonlinearity(check_m(m)).lambda0


def p(m: int) -> Fraction:
    return Nonlinearity(check_m(m)).p


def theta(m: int) -> Fraction:
    return Nonlinearity(check_m(m)).theta


def mu(m: int, lam: float) -> float:
    """Lower bound for the scaling along reflected trajectories."""
    l0 = float(lambda0(m))
    if not lam > l0:
        raise ValueError(f"mu requires lambda > lambda0 = {l0}, got {lam}")
    return 0.99 * (1.0 - l0 / lam) ** ((1.0 - l0) / l0)


def xi_m(m: int) -> float:
    b = base_integrals(check_m(m))
    return (3 - m) / (5 - m) ** 2 * b["intQ"] ** 2 / b["intQ2"]


def xi_tilde3(lam: float) -> float:
    b = base_integrals(3)
    return 0.5 * lam * b["intQ"] ** 2 / b["intQ2"]


def _check_lam(lam: float) -> float:
    if not (0.0 <= lam < 1.0):
        raise ValueError(f"lambda must lie in [0, 1), got {lam!r}")
    return float(lam)


def bisect(fun, lo: float, hi: float, tol: float = BISECT_TOL, maxiter: int = 200) -> float:
    """Plain bisection; requires a sign change on ``[lo, hi]``. ``tol=0`` runs to adjacent floats."""
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f = {flo}, {fhi}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def threshold_function(m: int, lam: float) -> float:
    """``f(lam) = lam ((1 - l0)/(lam - l0))^(1 - l0)``; decreasing on ``(l0, 1)``."""
    l0 = float(lambda0(m))
    return lam * ((1.0 - l0) / (lam - l0)) ** (1.0 - l0)


_LT_CACHE: dict = {}


def lambda_tilde(m: int) -> float:
    m = check_m(m)
    if m not in _LT_CACHE:
        l0 = float(lambda0(m))
        target = 2.0 ** float(p(m))
        _LT_CACHE[m] = bisect(lambda s: threshold_function(m, s) - target, l0 + _NUDGE, 1.0 - _NUDGE, tol=0.0)
    return _LT_CACHE[m]


def classify_regime(m: int, lam: float, tol: float = CRITICAL_TOL) -> Regime:
    lam = _check_lam(lam)
    lt = lambda_tilde(m)
    if abs(lam - lt) < tol:
        return Regime.CRITICAL
    if lam <= float(lambda0(m)):
        return Regime.REFRACTION_LARGE
    if lam < lt:
        return Regime.REFRACTION_SMALL
    return Regime.REFLECTION


def law_lhs(m: int, lam: float, c: float) -> float:
    """Left side ``g(c)`` shared by the three c_inf equations (undefined at ``lam = l0``)."""
    l0 = float(lambda0(m))
    return c ** l0 * ((lam - l0 * c) / (lam - l0)) ** (1.0 - l0)


def law_target(regime: Regime, m: int) -> float:
    return 2.0 ** float(p(m)) if regime.is_refraction else 1.0


def law_residual(m: int, lam: float, c: float, regime: Regime | None = None) -> float:
    """Residual of the defining equation of ``c_inf`` for the regime of ``lam``."""
    regime = regime or classify_regime(m, lam)
    if regime is Regime.CRITICAL:
        return c - lambda_tilde(m)
    if lam == float(lambda0(m)):
        return c - 1.0
    return law_lhs(m, lam, c) - law_target(regime, m)


def energy_balance_residual(m: int, lam: float, c: float, regime: Regime | None = None) -> float:
    """``c^(2 theta)(lam - l0 c) - K (lam - l0)`` with ``K = 2^(2/(m-1))`` or 1."""
    regime = regime or classify_regime(m, lam)
    l0 = float(lambda0(m))
    th = float(theta(m))
    K = 2.0 ** (2.0 / (m - 1)) if regime.is_refraction else 1.0
    return c ** (2 * th) * (lam - l0 * c) - K * (lam - l0)


@dataclass(frozen=True)
class ScalingPrediction:
    m: int
    lam: float
    c_inf: float
    regime: Regime
    final_velocity: float
    final_mass_ratio: float | None
    amplitude_prefactor: float
    residual: float

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "lambda": self.lam,
            "c_inf": self.c_inf,
            "regime": self.regime.value,
            "final_velocity": self.final_velocity,
            "final_mass_ratio": self.final_mass_ratio,
            "amplitude_prefactor": self.amplitude_prefactor,
            "residual": self.residual,
        }


def _solve_c_inf(m: int, lam: float, regime: Regime) -> float:
    l0 = float(lambda0(m))
    if regime is Regime.CRITICAL:
        return lambda_tilde(m)
    if lam == l0:
        return 1.0
    K = law_target(regime, m)
    fun = lambda c: law_lhs(m, lam, c) - K
    if regime is Regime.REFRACTION_LARGE:
        lo, hi = 1.0, 2.0 ** float(p(m))
    elif regime is Regime.REFRACTION_SMALL:
        # the minimal branch below lam is excluded on purpose
        lo, hi = lam + _NUDGE, 1.0 - _NUDGE
    else:
        lo, hi = _NUDGE, lam - _NUDGE
    # g is steep near lam = l0, so a fixed tolerance in c leaves a visible residual there
    return bisect(fun, lo, hi, tol=0.0)


def final_mass_ratio(m: int, lam: float, c_inf: float | None = None) -> float:
    """Final soliton mass over ``M[Q]``."""
    regime = classify_regime(m, lam)
    if regime is Regime.CRITICAL:
        raise ValueError("final mass is not predicted at the critical shift")
    if c_inf is None:
        c_inf = _solve_c_inf(m, lam, regime)
    e = 2.0 / (m - 1) - 0.5
    ratio = c_inf ** e
    if regime.is_refraction:
        ratio *= 2.0 ** (-2.0 / (m - 1))
    return ratio


def c_infinity(m: int, lam: float, tol: float = CRITICAL_TOL) -> ScalingPrediction:
    m = check_m(m)
    lam = _check_lam(lam)
    regime = classify_regime(m, lam, tol)
    c = _solve_c_inf(m, lam, regime)
    kappa = 2.0 ** (-1.0 / (m - 1)) if regime.is_refraction else 1.0
    ratio = None if regime is Regime.CRITICAL else final_mass_ratio(m, lam, c)
    return ScalingPrediction(
        m=m,
        lam=lam,
        c_inf=c,
        regime=regime,
        final_velocity=c - lam,
        final_mass_ratio=ratio,
        amplitude_prefactor=kappa,
        residual=law_residual(m, lam, c, regime),
    )


def count_sign_changes(m: int, lam: float, n: int = 2001) -> int:
    """Sign changes of the reflection law on ``(0, lam)``; uniqueness means exactly one."""
    cs = np.linspace(_NUDGE, lam - _NUDGE, n)
    vals = np.array([law_lhs(m, lam, c) - 1.0 for c in cs])
    s = np.sign(vals)
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s)))


def law_table(m: int, lams) -> list[dict]:
    rows = []
    for lam in lams:
        pred = c_infinity(m, float(lam))
        rows.append(pred.as_dict())
    return rows


def constants(m: int) -> dict:
    return {
        "m": m,
        "lambda0": str(lambda0(m)),
        "p": str(p(m)),
        "theta": str(theta(m)),
        "lambda_tilde": lambda_tilde(m),
        "xi_m": xi_m(m),
    }


__all__ = [
    "Regime",
    "ScalingPrediction",
    "lambda0",
    "p",
    "theta",
    "mu",
    "xi_m",
    "xi_tilde3",
    "lambda_tilde",
    "threshold_function",
    "classify_regime",
    "c_infinity",
    "final_mass_ratio",
    "law_lhs",
    "law_residual",
    "energy_balance_residual",
    "count_sign_changes",
    "constants",
    "bisect",
]

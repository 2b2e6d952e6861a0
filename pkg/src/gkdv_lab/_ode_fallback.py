"""Pure-Python RK4 flow for the adiabatic (C, P) system; mirrors the compiled kernel."""
from __future__ import annotations

import math

import numpy as np


def _ratio(kind: int, gamma: float, r: float) -> float:
    if kind != 0:
        return 0.0
    t = math.tanh(gamma * r)
    return 0.5 * gamma * (1.0 - t * t) / (1.5 + 0.5 * t)


def rk4_flow(l0, p, lam, eps, gamma, kind, C0, P0, t0, dt, nmax, p_exit):
    ta = np.empty(nmax + 1)
    Ca = np.empty(nmax + 1)
    Pa = np.empty(nmax + 1)
    C, P = float(C0), float(P0)
    cfix = lam / l0
    h = 0.5 * dt
    n = 0
    status = 0
    below = False
    ta[0], Ca[0], Pa[0] = t0, C, P
    while n < nmax:
        k1c = eps * p * C * (C - cfix) * _ratio(kind, gamma, eps * P)
        k1p = C - lam
        Ci, Pi = C + h * k1c, P + h * k1p
        k2c = eps * p * Ci * (Ci - cfix) * _ratio(kind, gamma, eps * Pi)
        k2p = Ci - lam
        Ci, Pi = C + h * k2c, P + h * k2p
        k3c = eps * p * Ci * (Ci - cfix) * _ratio(kind, gamma, eps * Pi)
        k3p = Ci - lam
        Ci, Pi = C + dt * k3c, P + dt * k3p
        k4c = eps * p * Ci * (Ci - cfix) * _ratio(kind, gamma, eps * Pi)
        k4p = Ci - lam
        C = C + dt * (k1c + 2.0 * k2c + 2.0 * k3c + k4c) / 6.0
        P = P + dt * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        n += 1
        ta[n], Ca[n], Pa[n] = t0 + n * dt, C, P
        if C < lam:
            below = True
        if P >= p_exit:
            status = 1
            break
        if below and P <= -p_exit:
            status = 2
            break
    return ta[: n + 1], Ca[: n + 1], Pa[: n + 1], n, status

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 flow for the adiabatic (C, P) system."""
import numpy as np
cimport numpy as cnp
from libc.math cimport tanh

cnp.import_array()


cdef inline double _ratio(int kind, double gamma, double r) nogil:
    # a'/a for the tanh medium; zero for a constant medium
    cdef double t
    if kind != 0:
        return 0.0
    t = tanh(gamma * r)
    return 0.5 * gamma * (1.0 - t * t) / (1.5 + 0.5 * t)


def rk4_flow(double l0, double p, double lam, double eps, double gamma, int kind,
             double C0, double P0, double t0, double dt, long nmax, double p_exit):
    """Integrate from ``(C0, P0)`` at ``t0``; stop on escape or after ``nmax`` steps.

    Returns ``(t, C, P, n_steps, status)``, status 0 = horizon, 1 = exit right,
    2 = exit left after ``C`` dropped below ``lam``.
    """
    cdef cnp.ndarray[double] ta = np.empty(nmax + 1)
    cdef cnp.ndarray[double] Ca = np.empty(nmax + 1)
    cdef cnp.ndarray[double] Pa = np.empty(nmax + 1)
    cdef double[::1] tv = ta
    cdef double[::1] Cv = Ca
    cdef double[::1] Pv = Pa
    cdef double C = C0, P = P0, ks = l0
    cdef double k1c, k1p, k2c, k2p, k3c, k3p, k4c, k4p, Ci, Pi
    cdef double cfix = lam / l0
    cdef double h = 0.5 * dt
    cdef long n = 0
    cdef int status = 0
    cdef bint below = False
    tv[0] = t0
    Cv[0] = C
    Pv[0] = P
    with nogil:
        while n < nmax:
            k1c = eps * p * C * (C - cfix) * _ratio(kind, gamma, eps * P)
            k1p = C - lam
            Ci = C + h * k1c
            Pi = P + h * k1p
            k2c = eps * p * Ci * (Ci - cfix) * _ratio(kind, gamma, eps * Pi)
            k2p = Ci - lam
            Ci = C + h * k2c
            Pi = P + h * k2p
            k3c = eps * p * Ci * (Ci - cfix) * _ratio(kind, gamma, eps * Pi)
            k3p = Ci - lam
            Ci = C + dt * k3c
            Pi = P + dt * k3p
            k4c = eps * p * Ci * (Ci - cfix) * _ratio(kind, gamma, eps * Pi)
            k4p = Ci - lam
            C = C + dt * (k1c + 2.0 * k2c + 2.0 * k3c + k4c) / 6.0
            P = P + dt * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
            n += 1
            tv[n] = t0 + n * dt
            Cv[n] = C
            Pv[n] = P
            if C < lam:
                below = True
            if P >= p_exit:
                status = 1
                break
            if below and P <= -p_exit:
                status = 2
                break
    return ta[:n + 1], Ca[:n + 1], Pa[:n + 1], n, status

"""Compiled vs pure-Python RK4 kernel for the adiabatic (C, P) flow.

Usage: ``python benchmarks/bench_ode_kernel.py [--steps N] [--repeat R]``
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gkdv_lab import kernels
from gkdv_lab.scaling_laws import lambda0, p


def _args(steps: int):
    m, lam, eps, gamma = 3, 0.6, 0.01, 1.0
    P0 = -9.0 / (gamma * eps)
    # exit threshold beyond reach so every run takes exactly ``steps`` steps
    return (float(lambda0(m)), float(p(m)), lam, eps, gamma, 0, 1.0, P0, 0.0, 0.05, steps, 1e300)


def time_backend(fn, steps: int, repeat: int) -> tuple[float, tuple]:
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*_args(steps))
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    t_py, out_py = time_backend(kernels.python_rk4_flow, a.steps, a.repeat)
    print(f"python   {t_py * 1e3:9.2f} ms  ({t_py / a.steps * 1e9:7.1f} ns/step)")
    if kernels.BACKEND != "cython":
        print("compiled kernel not built; only the fallback was timed")
        return
    t_cy, out_cy = time_backend(kernels.rk4_flow, a.steps, a.repeat)
    print(f"cython   {t_cy * 1e3:9.2f} ms  ({t_cy / a.steps * 1e9:7.1f} ns/step)")
    diff = max(float(np.max(np.abs(out_py[i] - out_cy[i]))) for i in range(3))
    print(f"speed-up {t_py / t_cy:9.1f}x   max trajectory difference {diff:.2e}")


if __name__ == "__main__":
    main()

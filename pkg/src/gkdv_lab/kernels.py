"""Backend selection for the hot ODE loop.

The compiled extension is used when it was built; setting ``GKDV_LAB_PURE=1``
forces the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _ode_fallback

BACKEND = "python"
rk4_flow = _ode_fallback.rk4_flow

if os.environ.get("GKDV_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ode_kernel
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        rk4_flow = _ode_kernel.rk4_flow

python_rk4_flow = _ode_fallback.rk4_flow

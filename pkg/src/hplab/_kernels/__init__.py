"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled module handles contiguous float64 data; complex problems and
installs without a compiler use ``_pykernels``. Set ``HPLAB_PURE_PYTHON=1``
to force the fallback.
"""

import os

import numpy as np

from . import _pykernels as python_backend
from ._pykernels import FORCED, POROUS, QUASILINEAR

compiled_backend = None
if os.environ.get("HPLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # no compiler at install time
        compiled_backend = None

BACKEND = "cython" if compiled_backend is not None else "python"

__all__ = [
    "BACKEND", "POROUS", "QUASILINEAR", "FORCED", "compiled_backend", "python_backend",
    "laplacian", "rhs", "rk4_step", "l1_memory", "tridiag_solve",
]


def _real(*arrays) -> bool:
    return compiled_backend is not None and all(
        a.dtype == np.float64 and a.flags.c_contiguous for a in arrays
    )


def laplacian(w, sm, sp, inv, out=None):
    if out is None:
        out = np.empty_like(w)
    if _real(w, out):
        return compiled_backend.laplacian(w, sm, sp, inv, out)
    return python_backend.laplacian(w, sm, sp, inv, out)


def rhs(kind, u, n, lam, sm, sp, inv, out=None):
    if out is None:
        out = np.empty_like(u)
    if kind != FORCED and _real(u, out):
        return compiled_backend.rhs(kind, u, float(n), lam, sm, sp, inv, out)
    return python_backend.rhs(kind, u, n, lam, sm, sp, inv, out)


def rk4_step(kind, u, n, lam, dt, bc, sm, sp, inv):
    """One RK4 step; ``bc`` is a (3, 2) array of boundary values at
    ``t``, ``t + dt/2`` and ``t + dt``."""
    if kind != FORCED and _real(u, bc):
        return compiled_backend.rk4_step(kind, u, float(n), lam, float(dt), bc, sm, sp, inv)
    return python_backend.rk4_step(kind, u, n, lam, dt, bc, sm, sp, inv)


def l1_memory(b, hist, m, j0, out):
    if _real(b, hist, out):
        return compiled_backend.l1_memory(b, hist, int(m), int(j0), out)
    return python_backend.l1_memory(b, hist, m, j0, out)


def tridiag_solve(lower, diag, upper, rhs):
    if _real(lower, diag, upper, rhs):
        return compiled_backend.tridiag_solve(lower, diag, upper, rhs)
    return python_backend.tridiag_solve(lower, diag, upper, rhs)

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled float64 versions of the hot kernels. See ``_pykernels`` for the
contract; only real-valued problems come through here."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()

DEF POROUS = 0
DEF QUASILINEAR = 1


cdef inline void _lap(const double[::1] w, const double[::1] sm, const double[::1] sp,
                      const double[::1] inv, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = w.shape[0]
    out[0] = 0.0
    out[n - 1] = 0.0
    for i in range(1, n - 1):
        out[i] = inv[i] * (sp[i] * (w[i + 1] - w[i]) - sm[i] * (w[i] - w[i - 1]))


cdef void _rhs(int kind, const double[::1] u, double p, const double[::1] sm,
               const double[::1] sp, const double[::1] inv, double[::1] tmp,
               double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = u.shape[0]
    if kind == QUASILINEAR:
        _lap(u, sm, sp, inv, out)
        for i in range(1, n - 1):
            out[i] *= u[i]
        return
    if p == 2.0:
        for i in range(n):
            tmp[i] = u[i] * u[i]
    else:
        for i in range(n):
            tmp[i] = pow(u[i], p)
    _lap(tmp, sm, sp, inv, out)
    for i in range(1, n - 1):
        out[i] -= u[i]


def laplacian(const double[::1] w, const double[::1] sm, const double[::1] sp,
              const double[::1] inv, double[::1] out):
    with nogil:
        _lap(w, sm, sp, inv, out)
    return np.asarray(out)


def rhs(int kind, const double[::1] u, double p, lam, const double[::1] sm,
        const double[::1] sp, const double[::1] inv, double[::1] out):
    if kind != POROUS and kind != QUASILINEAR:
        raise ValueError("compiled rhs handles the real-valued equations only")
    cdef double[::1] tmp = np.empty(u.shape[0])
    with nogil:
        _rhs(kind, u, p, sm, sp, inv, tmp, out)
    return np.asarray(out)


def rk4_step(int kind, const double[::1] u, double p, lam, double dt,
             const double[:, ::1] bc, const double[::1] sm, const double[::1] sp,
             const double[::1] inv):
    if kind != POROUS and kind != QUASILINEAR:
        raise ValueError("compiled rk4_step handles the real-valued equations only")
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double[::1] k1 = np.empty(n), k2 = np.empty(n), k3 = np.empty(n), k4 = np.empty(n)
    cdef double[::1] stage = np.empty(n), tmp = np.empty(n)
    new_arr = np.empty(n)
    cdef double[::1] new = new_arr
    with nogil:
        _rhs(kind, u, p, sm, sp, inv, tmp, k1)
        for i in range(n):
            stage[i] = u[i] + 0.5 * dt * k1[i]
        stage[0] = bc[1, 0]
        stage[n - 1] = bc[1, 1]
        _rhs(kind, stage, p, sm, sp, inv, tmp, k2)
        for i in range(n):
            stage[i] = u[i] + 0.5 * dt * k2[i]
        stage[0] = bc[1, 0]
        stage[n - 1] = bc[1, 1]
        _rhs(kind, stage, p, sm, sp, inv, tmp, k3)
        for i in range(n):
            stage[i] = u[i] + dt * k3[i]
        stage[0] = bc[2, 0]
        stage[n - 1] = bc[2, 1]
        _rhs(kind, stage, p, sm, sp, inv, tmp, k4)
        for i in range(n):
            new[i] = u[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        new[0] = bc[2, 0]
        new[n - 1] = bc[2, 1]
    return new_arr


def l1_memory(const double[::1] b, const double[:, ::1] hist, Py_ssize_t m,
              Py_ssize_t j0, double[::1] out):
    cdef Py_ssize_t j, i, n = hist.shape[1]
    cdef double bj
    with nogil:
        for j in range(j0, m):
            bj = b[j]
            for i in range(n):
                out[i] += bj * (hist[m - j, i] - hist[m - j - 1, i])
    return np.asarray(out)


def tridiag_solve(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] rhs):
    cdef Py_ssize_t i, n = diag.shape[0]
    cdef double[::1] c = np.empty(n), d = np.empty(n)
    x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef double denom
    with nogil:
        c[0] = upper[0] / diag[0]
        d[0] = rhs[0] / diag[0]
        for i in range(1, n):
            denom = diag[i] - lower[i] * c[i - 1]
            c[i] = upper[i] / denom if i < n - 1 else 0.0
            d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom
        x[n - 1] = d[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = d[i] - c[i] * x[i + 1]
    return x_arr

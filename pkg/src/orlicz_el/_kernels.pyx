# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled solver kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def stencil(const double[:, ::1] values, double w):
    cdef Py_ssize_t n = values.shape[0], d = values.shape[1], j, k, jn
    mid_arr = np.empty((n, d))
    slope_arr = np.empty((n, d))
    cdef double[:, ::1] mid = mid_arr
    cdef double[:, ::1] slope = slope_arr
    cdef double inv = 1.0 / w
    for j in range(n):
        jn = j + 1 if j + 1 < n else 0
        for k in range(d):
            mid[j, k] = 0.5 * (values[j, k] + values[jn, k])
            slope[j, k] = (values[jn, k] - values[j, k]) * inv
    return mid_arr, slope_arr


def scatter(const double[:, ::1] gx, const double[:, ::1] gy, double w):
    cdef Py_ssize_t n = gx.shape[0], d = gx.shape[1], j, k, jp
    out_arr = np.empty((n, d))
    cdef double[:, ::1] out = out_arr
    cdef double hw = 0.5 * w
    for j in range(n):
        jp = j - 1 if j > 0 else n - 1
        for k in range(d):
            out[j, k] = hw * (gx[j, k] + gx[jp, k]) + gy[jp, k] - gy[j, k]
    return out_arr


cdef void _thomas(double[::1] b, double off, double[::1] x, double[::1] c) noexcept nogil:
    cdef Py_ssize_t n = b.shape[0], i
    cdef double beta = b[0]
    x[0] = x[0] / beta
    for i in range(1, n):
        c[i] = off / beta
        beta = b[i] - off * c[i]
        x[i] = (x[i] - off * x[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        x[i] -= c[i + 1] * x[i + 1]


def cyclic_solve(double diag, double off, rhs):
    src = np.ascontiguousarray(rhs, dtype=float)
    cdef Py_ssize_t n = src.shape[0]
    cols_arr = src.reshape(n, -1)
    cdef const double[:, ::1] cols = cols_arr
    cdef Py_ssize_t m = cols.shape[1], i, j
    cdef double gamma = -diag
    b_arr = np.full(n, diag)
    cdef double[::1] b = b_arr
    b[0] = diag - gamma
    b[n - 1] = diag - off * off / gamma
    z_arr = np.zeros(n)
    cdef double[::1] z = z_arr
    z[0] = gamma
    z[n - 1] = off
    c_arr = np.empty(n)
    cdef double[::1] c = c_arr
    _thomas(b, off, z, c)
    cdef double vz = z[0] + off / gamma * z[n - 1]
    cdef double vy, f
    out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    y_arr = np.empty(n)
    cdef double[::1] y = y_arr
    for j in range(m):
        for i in range(n):
            y[i] = cols[i, j]
        _thomas(b, off, y, c)
        vy = y[0] + off / gamma * y[n - 1]
        f = vy / (1.0 + vz)
        for i in range(n):
            out[i, j] = y[i] - z[i] * f
    return out_arr.reshape(src.shape)

"""Pure-Python reference implementations of the solver kernels."""
from __future__ import annotations

import numpy as np


def stencil(values: np.ndarray, w: float):
    """Interval midpoints ``(u_j + u_{j+1})/2`` and slopes ``(u_{j+1} - u_j)/w``."""
    nxt = np.roll(values, -1, axis=0)
    return 0.5 * (values + nxt), (nxt - values) / w


def scatter(gx: np.ndarray, gy: np.ndarray, w: float) -> np.ndarray:
    """Node gradient from per-interval ``D_x L`` and ``D_y L``.

    ``g_k = w/2 (gx_k + gx_{k-1}) + gy_{k-1} - gy_k``.
    """
    gx_prev = np.roll(gx, 1, axis=0)
    gy_prev = np.roll(gy, 1, axis=0)
    return 0.5 * w * (gx + gx_prev) + gy_prev - gy


def _thomas(a_diag, off, rhs):
    n = len(a_diag)
    c = np.empty(n)
    x = np.array(rhs, dtype=float, copy=True)
    beta = a_diag[0]
    x[0] = x[0] / beta
    for i in range(1, n):
        c[i] = off / beta
        beta = a_diag[i] - off * c[i]
        x[i] = (x[i] - off * x[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        x[i] -= c[i + 1] * x[i + 1]
    return x


def cyclic_solve(diag: float, off: float, rhs: np.ndarray) -> np.ndarray:
    """Solve the symmetric constant-coefficient cyclic tridiagonal system.

    ``A`` has ``diag`` on the diagonal and ``off`` on both off-diagonals and
    in the two corners.  Sherman-Morrison around the Thomas algorithm.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    gamma = -diag
    b = np.full(n, diag)
    b[0] = diag - gamma
    b[-1] = diag - off * off / gamma
    u = np.zeros(n)
    u[0], u[-1] = gamma, off
    z = _thomas(b, off, u)
    vz = z[0] + off / gamma * z[-1]
    out = np.empty_like(rhs)
    cols = rhs.reshape(n, -1)
    res = out.reshape(n, -1)
    for j in range(cols.shape[1]):
        y = _thomas(b, off, cols[:, j])
        vy = y[0] + off / gamma * y[-1]
        res[:, j] = y - z * (vy / (1.0 + vz))
    return out

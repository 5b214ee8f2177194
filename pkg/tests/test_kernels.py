import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_el import _pykernels, kernels

try:
    from orlicz_el import _kernels
except ImportError:
    _kernels = None

BACKENDS = [_pykernels] + ([_kernels] if _kernels is not None else [])
needs_compiled = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def dense_cyclic(n, diag, off):
    A = np.diag(np.full(n, diag)) + off * (np.eye(n, k=1) + np.eye(n, k=-1))
    A[0, -1] = A[-1, 0] = off
    return A


@pytest.mark.parametrize("k", BACKENDS, ids=lambda m: m.__name__)
def test_cyclic_solve_against_dense(k, rng):
    for n in (8, 33, 200):
        w = 1.0 / n
        diag, off = w * 1e-3 + 2 / w, -1 / w
        rhs = rng.normal(size=(n, 2))
        x = k.cyclic_solve(diag, off, rhs)
        np.testing.assert_allclose(dense_cyclic(n, diag, off) @ x, rhs, atol=1e-9 * np.abs(rhs).max() * diag)


@pytest.mark.parametrize("k", BACKENDS, ids=lambda m: m.__name__)
def test_stencil_scatter_definition(k, rng):
    v = rng.normal(size=(10, 1))
    x, y = k.stencil(v, 0.5)
    np.testing.assert_allclose(x[:, 0], 0.5 * (v[:, 0] + np.roll(v[:, 0], -1)))
    np.testing.assert_allclose(y[:, 0], (np.roll(v[:, 0], -1) - v[:, 0]) / 0.5)
    gx, gy = rng.normal(size=(10, 1)), rng.normal(size=(10, 1))
    g = k.scatter(gx, gy, 0.5)
    j = 4
    assert g[j, 0] == pytest.approx(0.25 * (gx[j, 0] + gx[j - 1, 0]) + gy[j - 1, 0] - gy[j, 0])


@needs_compiled
@given(st.integers(8, 300), st.integers(1, 3), st.integers(0, 2 ** 31))
def test_backend_parity(n, d, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, d))
    w = 1.0 / n
    for a, b in zip(_pykernels.stencil(v, w), _kernels.stencil(v, w)):
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)
    gx, gy = rng.normal(size=(n, d)), rng.normal(size=(n, d))
    np.testing.assert_allclose(_pykernels.scatter(gx, gy, w), _kernels.scatter(gx, gy, w),
                               rtol=1e-13, atol=1e-13)
    diag, off = w * 1e-3 + 2 / w, -1 / w
    rhs = rng.normal(size=(n, d))
    np.testing.assert_allclose(_pykernels.cyclic_solve(diag, off, rhs),
                               _kernels.cyclic_solve(diag, off, rhs), rtol=1e-9, atol=1e-12)


@needs_compiled
def test_compiled_backend_selected_by_default():
    assert kernels.BACKEND == "cython"


def test_env_switch_forces_python():
    code = "import orlicz_el; print(orlicz_el.KERNEL_BACKEND)"
    env = dict(os.environ, ORLICZ_EL_KERNELS="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

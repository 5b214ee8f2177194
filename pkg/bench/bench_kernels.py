"""Compare the compiled and pure-Python solver kernels.

    python bench/bench_kernels.py [--sizes 256 4096 65536] [--repeat 20]

Prints one row per (kernel, N) with the best-of-``repeat`` time for each
backend and the speedup, and checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from orlicz_el import _pykernels
from orlicz_el.solver import ProblemSpec, _gradient_values
from orlicz_el.lagrangians import exp_cosh_sublinear
from orlicz_el.nfunction import builtin

try:
    from orlicz_el import _kernels
except ImportError:
    _kernels = None


def _cases(n, rng):
    v = rng.normal(size=(n, 1))
    gx = rng.normal(size=(n, 1))
    gy = rng.normal(size=(n, 1))
    w = 1.0 / n
    rhs = rng.normal(size=(n, 1))
    diag, off = w * 1e-3 + 2 / w, -1 / w
    return {
        "stencil": lambda k: k.stencil(v, w),
        "scatter": lambda k: k.scatter(gx, gy, w),
        "cyclic_solve": lambda k: k.cyclic_solve(diag, off, rhs),
    }


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 4096, 65536])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the python backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'N':>8}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in args.sizes:
        for name, call in _cases(n, rng).items():
            tp = _best(lambda: call(_pykernels), args.repeat)
            if _kernels is None:
                print(f"{name:<14}{n:>8}{tp * 1e6:>14.1f}{'-':>14}{'-':>10}")
                continue
            a, b = call(_pykernels), call(_kernels)
            for x, y in zip(np.atleast_1d(a) if not isinstance(a, tuple) else a,
                            np.atleast_1d(b) if not isinstance(b, tuple) else b):
                np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-12)
            tc = _best(lambda: call(_kernels), args.repeat)
            print(f"{name:<14}{n:>8}{tp * 1e6:>14.1f}{tc * 1e6:>14.1f}{tp / tc:>10.1f}")
    # end-to-end gradient evaluation on the exponential instance at N=256
    prob = ProblemSpec(exp_cosh_sublinear(1.5), builtin("exp_family", n=5))
    v = rng.normal(size=(256, 1))
    t = _best(lambda: _gradient_values(prob, v), args.repeat)
    print(f"action gradient (N=256, active backend): {t * 1e6:.1f} us")


if __name__ == "__main__":
    main()

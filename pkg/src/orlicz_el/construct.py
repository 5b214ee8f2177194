"""Explicit regularizations: the doubling-controlled derivative ``psi*`` and
the submultiplicative power minorant ``Phi*(r) = K r**nu``.

``psi*`` is built from a finite run of doubling violations
``x_1 > x_2 > ... > x_D`` of a right-continuous nondecreasing ``psi``:

* ``psi* = psi`` on ``[2 x_1, inf)``;
* on ``[x_n, 2 x_n)``: ``max(psi(x), C_n/(2 x_n) * (x - x_n) + C_n/2)``;
* on ``[2 x_{n+1}, x_n)``: the constant ``C_n / 2``;

where ``C_n = psi*(2 x_n)``, so ``C_n = psi(2 x_1) / 2**(n-1)``.  Below
``x_D`` the last constant is continued down to ``cut = 2 x_D * 1e-3`` and
then joined linearly to 0.  Domination ``psi <= psi*`` is only claimed on
``[cut, inf)``; :attr:`PiecewiseDerivative.cut` records the truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import BadParam, IndexViolated, MalformedSequence, NoViolationFound
from .nfunction import NFunction, mo_indices
from .probes import IndexProbeConfig, ProbeConfig

CUT_FACTOR = 1e-3
SCAN_FACTOR = 2.0 ** -0.25


def _as_derivative(psi):
    """``(derivative, primitive or None)`` from an NFunction or a callable."""
    if isinstance(psi, NFunction):
        return psi.deriv, psi.eval
    if not callable(psi):
        raise BadParam("psi must be an NFunction or a callable")
    return (lambda x: np.asarray(psi(np.asarray(x, dtype=float)), dtype=float)), None


def find_violation_sequence(psi, depth: int, x_start: float = 1.0,
                            floor: float = 1e-300) -> list:
    """Points ``x_1 > ... > x_depth`` with ``psi(2x) > 2 psi(x)`` and ``2 x_{n+1} < x_n``.

    Scans downward from ``x_start`` by factors of ``2**-0.25``.  The list is
    shorter than ``depth`` when the scan hits ``floor`` or ``psi`` underflows
    to zero before enough violations are found.
    """
    if depth < 0:
        raise BadParam("depth must be nonnegative")
    if depth == 0:
        return []
    f, _ = _as_derivative(psi)
    seq = []
    x = float(x_start)
    block = 64
    while len(seq) < depth and x > floor:
        xs = x * SCAN_FACTOR ** np.arange(block)
        xs = xs[xs > floor]
        if len(xs) == 0:
            break
        v1, v2 = f(xs), f(2 * xs)
        if not np.any(v1 > 0) and not np.any(v2 > 0):
            break
        hit = np.flatnonzero(v2 > 2 * v1)
        if len(hit) == 0:
            x = xs[-1] * SCAN_FACTOR
            continue
        xn = float(xs[hit[0]])
        seq.append(xn)
        x = 0.5 * xn * SCAN_FACTOR
    if not seq:
        raise NoViolationFound(f"psi(2x) <= 2 psi(x) on the whole scan below x={x_start:g}")
    return seq


@dataclass(frozen=True)
class PiecewiseDerivative:
    """The regularized derivative as an evaluable piecewise object.

    ``breakpoints`` descend: ``2x_1, x_1, 2x_2, x_2, ..., 2x_D, x_D, cut``.
    ``segments[i]`` describes ``[breakpoints[i+1], breakpoints[i])`` and is
    one of ``("max_affine", slope, offset, x_n)``, ``("constant", c)`` or
    ``("linear", slope)`` for the final piece ``[0, cut)``.  Above
    ``breakpoints[0]`` the original derivative is used.
    """

    breakpoints: tuple
    segments: tuple
    original: Callable
    seq: tuple
    primitive: Optional[Callable] = None

    @property
    def cut(self) -> float:
        return self.breakpoints[-1] if self.breakpoints else 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.array(self.original(x), dtype=float, copy=True)
        if not self.breakpoints:
            return out
        for i, seg in enumerate(self.segments):
            hi = self.breakpoints[i]
            lo = self.breakpoints[i + 1] if i + 1 < len(self.breakpoints) else 0.0
            m = (x >= lo) & (x < hi)
            if not m.any():
                continue
            kind = seg[0]
            if kind == "max_affine":
                _, slope, offset, xn = seg
                out[m] = np.maximum(out[m], slope * (x[m] - xn) + offset)
            elif kind == "constant":
                out[m] = seg[1]
            else:
                out[m] = seg[1] * x[m]
        return out


def build_psi_star(psi, seq: Sequence[float]) -> PiecewiseDerivative:
    """Regularize ``psi`` along the violation points ``seq``."""
    f, prim = _as_derivative(psi)
    seq = [float(v) for v in seq]
    if not seq:
        return PiecewiseDerivative((), (), f, (), prim)
    for n, xn in enumerate(seq):
        if not xn > 0:
            raise MalformedSequence(f"x_{n + 1}={xn} is not positive")
        if n + 1 < len(seq) and not 2 * seq[n + 1] < xn:
            raise MalformedSequence(f"2 x_{n + 2} = {2 * seq[n + 1]:g} is not below x_{n + 1} = {xn:g}")
        a, b = f(np.array([xn, 2 * xn]))
        if not b > 2 * a:
            raise MalformedSequence(f"psi(2x) <= 2 psi(x) at x_{n + 1} = {xn:g}")
    C = float(f(np.array([2 * seq[0]]))[0])
    bps, segs = [], []
    for n, xn in enumerate(seq):
        bps += [2 * xn, xn]
        segs.append(("max_affine", C / (2 * xn), C / 2, xn))
        segs.append(("constant", C / 2))
        if n + 1 < len(seq):
            C = C / 2
    cut = 2 * seq[-1] * CUT_FACTOR
    bps.append(cut)
    segs.append(("linear", (C / 2) / cut))
    return PiecewiseDerivative(tuple(bps), tuple(segs), f, tuple(seq), prim)


def _quad(f, a, b):
    if b <= a:
        return 0.0
    val, _ = quad(lambda x: float(f(np.array([x]))[0]), a, b, limit=200,
                  epsabs=0.0, epsrel=1e-12)
    return val


def integrate_psi_star(pw: PiecewiseDerivative) -> NFunction:
    """Primitive ``Psi*(x) = int_0^x psi*``.

    Constant and linear pieces integrate in closed form; pieces that involve
    the original derivative use adaptive quadrature (or the supplied
    primitive above ``2 x_1``).
    """
    f, prim = pw.original, pw.primitive

    def orig_int(a, b):
        if prim is not None:
            return float(prim(np.array([b]))[0] - prim(np.array([a]))[0])
        return _quad(f, a, b)

    if not pw.breakpoints:
        if prim is not None:
            return NFunction("Psi*", lambda x: np.asarray(prim(np.asarray(x, float)), float), f)

        def ev0(x):
            x = np.asarray(x, dtype=float)
            flat = [_quad(f, 0.0, v) for v in x.reshape(-1)]
            return np.array(flat).reshape(x.shape)
        return NFunction("Psi*", ev0, f)

    asc = list(reversed(pw.breakpoints))          # cut, x_D, 2x_D, ..., 2x_1
    seg_asc = list(reversed(pw.segments))         # linear, const, max, ...
    starts = [0.0] + asc                          # segment lower ends
    ends = asc + [math.inf]

    def seg_int(i, a, b):
        if i == len(seg_asc):
            return orig_int(a, b)
        seg = seg_asc[i]
        if seg[0] == "linear":
            return 0.5 * seg[1] * (b * b - a * a)
        if seg[0] == "constant":
            return seg[1] * (b - a)
        _, slope, offset, xn = seg
        return _quad(lambda x: np.maximum(f(x), slope * (x - xn) + offset), a, b)

    cum = [0.0]
    for i in range(len(seg_asc)):
        cum.append(cum[-1] + seg_int(i, starts[i], ends[i]))
    cum = np.array(cum)
    starts_arr = np.array(starts)

    def ev(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.empty(flat.shape)
        idx = np.searchsorted(starts_arr, flat, side="right") - 1
        for j, (v, i) in enumerate(zip(flat, idx)):
            i = max(int(i), 0)
            out[j] = cum[i] + seg_int(i, starts[i], v)
        return out.reshape(x.shape)

    return NFunction("Psi*", ev, pw, {"depth": float(len(pw.seq))})


def phi_star_from_indices(phi: NFunction, nu: float, probe: ProbeConfig = ProbeConfig(),
                          r_points: int = 97, s_points: int = 129,
                          r_max: float = 1e8) -> tuple:
    """Fit ``K = min Phi(r s) / (r**nu Phi(s))`` over ``r >= 1`` and probed ``s``.

    Returns ``(K, Phi*)`` with ``Phi*(r) = K r**nu``.  Raises
    :class:`IndexViolated` when ``nu`` is not below the estimated lower index
    or when the minimum keeps falling at the largest probed ``r`` (so no
    positive constant exists).
    """
    if not nu > 1:
        raise BadParam("nu must exceed 1")
    idx = mo_indices(phi, IndexProbeConfig(u_lo=probe.lo, u_hi=probe.hi))
    if not nu < idx.alpha - idx.alpha_stderr:
        raise IndexViolated(f"nu={nu} is not below the lower index estimate {idx.alpha:.4g} of {phi.name}")
    r = np.geomspace(1.0, r_max, r_points)
    s = np.geomspace(probe.lo, probe.hi, s_points)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lr = phi.log_value(np.outer(r, s)) - phi.log_value(s)[None, :] - nu * np.log(r)[:, None]
    per_r = np.min(np.where(np.isnan(lr), np.inf, lr), axis=1)
    tail = per_r[-(r_points // 8):]
    lt = np.log(r[-(r_points // 8):])
    slope = np.polyfit(lt, tail, 1)[0]
    logK = float(np.min(per_r))
    if not np.isfinite(logK) or slope < -1e-3:
        raise IndexViolated(f"Phi(rs)/(r^nu Phi(s)) keeps decreasing in r for nu={nu} ({phi.name})")
    K = math.exp(logK) * (1 - 1e-12)
    logK = math.log(K)

    def lg(t):
        with np.errstate(divide="ignore"):
            return logK + nu * np.log(np.asarray(t, float))

    return K, NFunction(f"phi_star({K:.6g}*r^{nu:g})",
                        lambda t: K * np.power(np.asarray(t, float), nu),
                        lambda t: K * nu * np.power(np.asarray(t, float), nu - 1),
                        {"K": K, "nu": float(nu)}, lg,
                        lambda s: logK + nu * np.asarray(s, float))

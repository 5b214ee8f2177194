"""N-functions as computable objects and their pointwise calculus.

An :class:`NFunction` is an immutable bundle of vectorized callables
(value, right derivative, optional log-space evaluators).  Everything here
works on numpy arrays; scalars are accepted and returned as 0-d results.

Asymptotic conditions (Delta_2 variants, ordering relations) can only be
probed on finite grids, so every verdict returned below is a heuristic and
the reports carry the probe ranges they were computed on.
"""
from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Union

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import (BadParam, Delta2Violated, DomainOverflow,
                     NonMonotoneDerivative, ProbeOverflow)
from .probes import IndexProbeConfig, ProbeConfig

ArrayFn = Callable[[np.ndarray], np.ndarray]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


def _arr(t):
    return np.asarray(t, dtype=float)


@dataclass(frozen=True, eq=False)
class NFunction:
    """Convex growth function ``Phi`` with derivative ``phi``.

    ``log_eval(t)`` returns ``log Phi(t)`` without overflow and
    ``log_eval_exp(s)`` returns ``log Phi(exp(s))``, which lets ordering scans
    run at arguments far beyond the float range.  ``closed_conjugate`` may be
    an NFunction or a zero-argument factory (used by mutually conjugate
    families).
    """

    name: str
    eval: ArrayFn
    deriv: ArrayFn
    params: Mapping[str, float] = field(default_factory=dict)
    log_eval: Optional[ArrayFn] = None
    log_eval_exp: Optional[ArrayFn] = None
    closed_conjugate: Union["NFunction", Callable[[], "NFunction"], None] = None

    def __call__(self, t):
        return self.eval(_arr(t))

    def __repr__(self):
        return f"NFunction({self.name})"

    def known_conjugate(self) -> Optional["NFunction"]:
        c = self.closed_conjugate
        if c is None or isinstance(c, NFunction):
            return c
        return c()

    def without_conjugate(self) -> "NFunction":
        """Same function with the analytic conjugate hint dropped."""
        return NFunction(self.name, self.eval, self.deriv, dict(self.params),
                         self.log_eval, self.log_eval_exp, None)

    def log_value(self, t) -> np.ndarray:
        t = _arr(t)
        if self.log_eval is not None:
            return self.log_eval(t)
        with np.errstate(divide="ignore", over="ignore"):
            return np.log(self.eval(t))

    def log_value_exp(self, s) -> np.ndarray:
        """``log Phi(e**s)``; NaN marks arguments that cannot be evaluated."""
        s = _arr(s)
        if self.log_eval_exp is not None:
            return self.log_eval_exp(s)
        out = np.full(s.shape, np.nan)
        ok = s < _LOG_FLOAT_MAX
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            vals = self.log_value(np.exp(s[ok]))
        vals = np.where(np.isposinf(vals) & (self.log_eval is None), np.nan, vals)
        out[ok] = vals
        return out


# --------------------------------------------------------------------------
# builtin families

def _power(p: float) -> NFunction:
    p = float(p)
    if not p > 1:
        raise BadParam(f"power family needs p > 1, got p={p}")
    q = p / (p - 1.0)
    logp = math.log(p)

    def ev(t):
        return np.power(t, p) / p

    def de(t):
        return np.power(t, p - 1.0)

    def lg(t):
        with np.errstate(divide="ignore"):
            return p * np.log(t) - logp

    def lge(s):
        return p * s - logp

    return NFunction(f"power({p:g})", ev, de, {"p": p}, lg, lge,
                     closed_conjugate=lambda: _power(q))


def _exp_tail_series(n: int, t: np.ndarray):
    """Sum of t**k * n!/(n+k)! for k >= 0 (converges fast for t < 1/2)."""
    term = np.ones_like(t)
    s = term.copy()
    for k in range(1, 18):
        term *= t / (n + k)
        s += term
    return s


def _exp_family(n: int) -> NFunction:
    if int(n) != n or n < 1:
        raise BadParam(f"exp_family needs an integer n >= 1, got n={n}")
    n = int(n)
    lgn = float(gammaln(n + 1))
    split = 0.5

    def ev(t):
        t = _arr(t)
        if n == 1:
            with np.errstate(over="ignore"):
                return np.expm1(t)
        out = np.empty(t.shape)
        small = t < split
        ts = t[small]
        out[small] = np.power(ts, n) / math.exp(lgn) * _exp_tail_series(n, ts)
        tb = t[~small]
        with np.errstate(over="ignore"):
            if n == 2:
                out[~small] = np.expm1(tb) - tb
            else:
                out[~small] = np.exp(tb) * gammainc(n, tb)
        return out

    def lg(t):
        t = _arr(t)
        out = np.empty(t.shape)
        small = t < split
        ts = t[small]
        with np.errstate(divide="ignore"):
            out[small] = n * np.log(ts) - lgn + np.log(_exp_tail_series(n, ts))
        tb = t[~small]
        out[~small] = tb + np.log(gammainc(n, tb))
        return out

    if n == 1:
        def de(t):
            with np.errstate(over="ignore"):
                return np.exp(_arr(t))
    else:
        de = _exp_family(n - 1).eval

    return NFunction(f"exp_family({n})", ev, de, {"n": float(n)}, lg)


def _log_perturbed(k: int) -> NFunction:
    if k not in (1, 2):
        raise BadParam(f"log_perturbed needs k in {{1, 2}}, got k={k}")
    k = int(k)
    u0 = math.exp(2 * k)
    d0 = 3 * k * u0 / (2 * k) ** (k + 1)
    u1 = 2 * u0 / 3  # area match below u0 puts the kink of the splice here
    slope0 = d0 / u1

    def ev(t):
        t = _arr(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            big = t * t / np.power(np.log(np.maximum(t, u0)), k)
        return np.where(t < u1, 0.5 * slope0 * t * t,
                        np.where(t < u0, d0 * (u1 / 2 + (t - u1)), big))

    def de(t):
        t = _arr(t)
        L = np.log(np.maximum(t, u0))
        big = t * (2 * L - k) / np.power(L, k + 1)
        return np.where(t < u1, slope0 * t, np.where(t < u0, d0, big))

    def lg(t):
        t = _arr(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            big = 2 * np.log(t) - k * np.log(np.log(np.maximum(t, u0)))
            small = np.log(ev(np.minimum(t, u0)))
        return np.where(t >= u0, big, small)

    def lge(s):
        s = _arr(s)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            big = 2 * s - k * np.log(np.maximum(s, 2 * k))
            small = np.log(ev(np.exp(np.minimum(s, 2 * k))))
        return np.where(s >= 2 * k, big, small)

    return NFunction(f"log_perturbed({k})", ev, de, {"k": float(k)}, lg, lge)


_FAMILIES = {"power": ("p", _power), "exp_family": ("n", _exp_family),
             "log_perturbed": ("k", _log_perturbed)}


def builtin(family: str, **params) -> NFunction:
    """Return a named family: ``power(p)``, ``exp_family(n)``, ``log_perturbed(k)``.

    ``power(p)`` is normalized as ``t**p / p`` so that it is conjugate to
    ``power(p/(p-1))``.  ``log_perturbed(k)`` equals ``u**2 / log(u)**k`` for
    ``u >= e**(2k)``; below that it is quadratic then linear, spliced so the
    value and derivative are continuous.
    """
    if family not in _FAMILIES:
        raise BadParam(f"unknown family {family!r}; expected one of {sorted(_FAMILIES)}")
    key, make = _FAMILIES[family]
    if set(params) != {key}:
        raise BadParam(f"family {family!r} takes exactly one parameter {key!r}, got {sorted(params)}")
    return make(params[key])


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def parse_nfunction(spec: str) -> NFunction:
    """Parse ``'power(2)'``, ``'exp_family(n=3)'`` or ``'conjugate(power(3))'``."""
    m = _SPEC_RE.match(spec)
    if not m:
        raise BadParam(f"cannot parse N-function spec {spec!r}")
    fam, inner = m.group(1), m.group(2).strip()
    if fam == "conjugate":
        return conjugate(parse_nfunction(inner))
    if fam not in _FAMILIES:
        raise BadParam(f"unknown family {fam!r} in {spec!r}")
    key = _FAMILIES[fam][0]
    if "=" in inner:
        name, _, val = inner.partition("=")
        if name.strip() != key:
            raise BadParam(f"family {fam!r} takes parameter {key!r}, got {name.strip()!r}")
        inner = val
    try:
        value = float(inner)
    except ValueError:
        raise BadParam(f"bad parameter value {inner!r} in {spec!r}") from None
    return builtin(fam, **{key: value})


# --------------------------------------------------------------------------
# monotone root finding

def _bracket(f, y, start=1.0, limit=4000):
    """Geometric bracket ``lo <= x <= hi`` with f(lo) <= y <= f(hi), per entry."""
    lo = np.full(y.shape, start)
    hi = np.full(y.shape, start)
    flo = f(lo)
    need = flo > y
    for _ in range(limit):
        if not need.any():
            break
        lo = np.where(need, lo * 0.5, lo)
        flo = np.where(need, f(lo), flo)
        need = (flo > y) & (lo > 0)
    fhi = f(hi)
    need = fhi < y
    for _ in range(limit):
        if not need.any():
            break
        hi = np.where(need, hi * 2.0, hi)
        fhi = np.where(need, f(hi), fhi)
        need = (fhi < y) & np.isfinite(hi)
    return lo, hi


def _solve_increasing(f, y, lo, hi, tol, max_iter=200):
    """Illinois-safeguarded bisection for f(x) = y on [lo, hi].

    Returns the upper bracket end, so on a flat stretch of f the answer tends
    to the smallest x with f(x) >= y (ties go to the lower endpoint).
    """
    y = np.asarray(y, dtype=float)
    a, b = lo.astype(float).copy(), hi.astype(float).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        fa, fb = f(a) - y, f(b) - y
    fb = np.where(np.isnan(fb), np.inf, fb)
    side = np.zeros(y.shape, dtype=int)
    active = (b - a) > tol * np.abs(b)
    active &= ~(fb == 0)
    for _ in range(max_iter):
        if not active.any():
            break
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            c = b - fb * (b - a) / (fb - fa)
        mid = 0.5 * (a + b)
        bad = ~np.isfinite(c) | (c <= a) | (c >= b) | ~np.isfinite(fb)
        c = np.where(bad, mid, c)
        with np.errstate(over="ignore", invalid="ignore"):
            fc = f(c) - y
        fc = np.where(np.isnan(fc), np.inf, fc)
        upper = active & (fc >= 0)
        lower = active & (fc < 0)
        b = np.where(upper, c, b)
        fb = np.where(upper, fc, fb)
        a = np.where(lower, c, a)
        fa = np.where(lower, fc, fa)
        # Illinois: halve the stale endpoint value when the same side repeats
        fa = np.where(upper & (side == 1), 0.5 * fa, fa)
        fb = np.where(lower & (side == -1), 0.5 * fb, fb)
        side = np.where(upper, 1, np.where(lower, -1, side))
        active &= ((b - a) > tol * np.abs(b)) & (fc != 0)
    return b


def inverse(phi: NFunction, y, tol: float = 1e-12):
    """Solve ``Phi(x) = y`` for ``x >= 0`` (vectorized over ``y``)."""
    y = _arr(y)
    if np.any(y < 0) or np.any(np.isnan(y)):
        raise BadParam("inverse needs y >= 0")
    if np.any(np.isinf(y)):
        raise DomainOverflow("inverse of an infinite value")
    flat = y.reshape(-1)
    out = np.zeros(flat.shape)
    pos = flat > 0
    if pos.any():
        yy = flat[pos]
        if phi.log_eval is not None:
            f = phi.log_value
            target = np.log(yy)
        else:
            f = phi.eval
            target = yy
        lo, hi = _bracket(f, target)
        x = _solve_increasing(f, target, lo, hi, 1e-15)
        # enforce the value criterion |Phi(x) - y| <= tol*max(1, y)
        fx = phi.eval(x)
        bad = np.abs(fx - yy) > tol * np.maximum(1.0, yy)
        if bad.any():
            x[bad] = _solve_increasing(phi.eval, yy[bad], lo[bad], hi[bad], 0.0, 400)
        out[pos] = x
    return out.reshape(y.shape) if y.ndim else float(out[0])


# --------------------------------------------------------------------------
# conjugate

class _InverseDerivativeTable:
    """Fill-once table of ``psi = phi^{-1}`` on a log grid in y."""

    nodes = 2048

    def __init__(self, phi: NFunction, domain_max: float, tol: float):
        self.phi = phi
        self.tol = tol
        self.x_lo = min(1e-8, domain_max * 1e-8)
        self.domain_max = domain_max
        self._lock = threading.Lock()
        self._table = None

    def _build(self):
        phi = self.phi
        xs = np.geomspace(self.x_lo, self.domain_max, self.nodes)
        with np.errstate(over="ignore"):
            dv = phi.deriv(xs)
        if np.any(~np.isfinite(dv)):
            raise DomainOverflow(f"derivative of {phi.name} overflows below domain_max={self.domain_max}")
        if np.any(np.diff(dv) < -1e-12 * np.abs(dv[1:])):
            j = int(np.argmax(np.diff(dv) < -1e-12 * np.abs(dv[1:])))
            raise NonMonotoneDerivative(f"derivative of {phi.name} decreases near x={xs[j]:.6g}")
        if not dv[0] > 0:
            raise NonMonotoneDerivative(f"derivative of {phi.name} vanishes at x={xs[0]:.3g}")
        ys = np.geomspace(dv[0], dv[-1], self.nodes)
        lo, hi = _bracket(phi.deriv, ys, start=1.0)
        x = _solve_increasing(phi.deriv, ys, lo, hi, self.tol)
        x[0], x[-1] = xs[0], xs[-1]
        return ys, np.maximum.accumulate(x)

    def table(self):
        if self._table is None:
            with self._lock:
                if self._table is None:
                    ys, xs = self._build()
                    self._logs = (np.log(ys), np.log(xs))
                    self._table = (ys, xs)
        return self._table

    def _polish(self, yi, ys, xs):
        """Log-log interpolation, then safeguarded Newton steps on ``phi(x) = y``.

        The slope of ``phi`` comes from a forward difference; iterates are
        clamped to the table bracket and any entry that fails to settle
        falls back to bracketed root finding.
        """
        f = self.phi.deriv
        lys, lxs = self._logs
        ly = np.log(yi)
        j = np.clip(np.searchsorted(lys, ly, side="right") - 1, 0, len(ys) - 2)
        a, b = xs[j], xs[j + 1]
        la, lb = lys[j], lys[j + 1]
        theta = (ly - la) / (lb - la)
        x = np.exp(lxs[j] + theta * (lxs[j + 1] - lxs[j]))
        h = 1e-7
        for _ in range(3):
            f0 = f(x)
            slope = (f(x * (1 + h)) - f0) / (x * h)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(slope > 0, (f0 - yi) / slope, 0.0)
            x = np.clip(x - step, a, b)
        bad = np.flatnonzero(~(np.abs(f(x) - yi) <= self.tol * yi))
        if len(bad):
            x[bad] = _solve_increasing(f, yi[bad], a[bad], b[bad], self.tol)
        return x

    def __call__(self, y):
        y = _arr(y)
        flat = y.reshape(-1)
        out = np.zeros(flat.shape)
        pos = flat > 0
        if pos.any():
            ys, xs = self.table()
            yy = flat[pos]
            inside = (yy >= ys[0]) & (yy <= ys[-1])
            res = np.empty(yy.shape)
            if inside.any():
                res[inside] = self._polish(yy[inside], ys, xs)
            if (~inside).any():
                yo = yy[~inside]
                lo, hi = _bracket(self.phi.deriv, yo, start=1.0)
                res[~inside] = _solve_increasing(self.phi.deriv, yo, lo, hi, self.tol)
            out[pos] = res
        return out.reshape(y.shape)


def _default_domain_max(phi: NFunction) -> float:
    x = 1e3
    with np.errstate(over="ignore"):
        while not np.isfinite(phi.deriv(np.array([x]))[0]) or phi.deriv(np.array([x]))[0] > 1e300:
            x *= 0.5
    return x


def conjugate(phi: NFunction, domain_max: Optional[float] = None, tol: float = 1e-13) -> NFunction:
    """Complementary N-function ``Psi`` of ``phi``.

    Returns ``phi``'s analytic conjugate when it carries one.  Otherwise the
    inverse derivative ``psi`` is tabulated lazily (2048 log-spaced values,
    bisection) and then polished inside the table bracket; ``Psi`` itself is
    evaluated through the equality case of Young's inequality,
    ``Psi(y) = y*psi(y) - Phi(psi(y))``, which equals the primitive of ``psi``
    and is insensitive to first-order errors in ``psi``.
    """
    known = phi.known_conjugate()
    if known is not None:
        return known
    if tol <= 0:
        raise BadParam("tol must be positive")
    dmax = _default_domain_max(phi) if domain_max is None else float(domain_max)
    psi = _InverseDerivativeTable(phi, dmax, tol)
    psi.table()  # monotonicity is checked eagerly

    def ev(y):
        y = _arr(y)
        x = psi(y)
        with np.errstate(invalid="ignore"):
            val = y * x - phi.eval(x)
        return np.maximum(val, 0.0)

    return NFunction(f"conjugate({phi.name})", ev, psi, dict(phi.params),
                     closed_conjugate=phi)


# --------------------------------------------------------------------------
# indices

@dataclass(frozen=True)
class IndexEstimate:
    alpha: float
    beta: float
    alpha_stderr: float
    beta_stderr: float
    probe_range: tuple


def _checked_log(eta: NFunction, t) -> np.ndarray:
    with np.errstate(over="ignore"):
        v = eta.log_value(t)
    if eta.log_eval is None and np.any(np.isposinf(v)):
        raise ProbeOverflow(f"{eta.name} overflows on the probe grid and has no log evaluator")
    return v


def _slope(x, y):
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 2:
        return math.inf, math.inf
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    with np.errstate(over="ignore"):
        return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def mo_indices(eta: NFunction, probe: IndexProbeConfig = IndexProbeConfig()) -> IndexEstimate:
    """Matuszewska-Orlicz indices from the slope of ``log M(t)`` vs ``log t``.

    ``M(t) = max_u eta(t*u)/eta(u)`` over the probe's u-grid; alpha is fitted
    on the smallest decade of t, beta on the largest.
    """
    u = probe.u_grid()
    lu = _checked_log(eta, u)
    small, large = probe.t_grids()

    def log_m(ts):
        with np.errstate(invalid="ignore"):
            return np.max(_checked_log(eta, np.outer(ts, u)) - lu[None, :], axis=1)

    ppd = probe.points_per_decade
    ts_a, ts_b = small[: ppd + 1], large[-(ppd + 1):]
    a, a_err = _slope(np.log(ts_a), log_m(ts_a))
    b, b_err = _slope(np.log(ts_b), log_m(ts_b))
    return IndexEstimate(a, b, a_err, b_err, (probe.u_lo, probe.u_hi))


# --------------------------------------------------------------------------
# Delta_2 scan

@dataclass(frozen=True)
class Delta2Report:
    variant: str
    holds: bool
    sup_ratio: float
    worst_x: float
    grid: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    probe_range: tuple = ()
    tail_slope: float = 0.0
    heuristic: bool = True


_D2_RANGES = {"global": lambda p: (p.lo, p.hi),
              "at_infinity": lambda p: (max(p.lo, 1.0), p.hi),
              "at_zero": lambda p: (p.lo, min(p.hi, 1.0))}


def check_delta2(eta: NFunction, variant: str = "global", probe: ProbeConfig = ProbeConfig(),
                 k_max: float = 1e12, trend_tol: float = 0.05) -> Delta2Report:
    """Scan ``eta(2x)/eta(x)`` over a log grid (heuristic verdict).

    The condition is deemed to hold when the ratio stays below ``k_max`` and
    its log does not trend upward over the asymptotic end decade(s).
    """
    if variant not in _D2_RANGES:
        raise BadParam(f"variant must be one of {sorted(_D2_RANGES)}")
    lo, hi = _D2_RANGES[variant](probe)
    x = np.geomspace(lo, hi, probe.points)
    with np.errstate(invalid="ignore"):
        lr = _checked_log(eta, 2 * x) - _checked_log(eta, x)
    finite = np.all(np.isfinite(lr))
    lx = np.log(x)
    decade = math.log(10.0)
    slopes = []
    if variant in ("global", "at_infinity"):
        sel = lx >= lx[-1] - decade
        slopes.append(_slope(lx[sel], lr[sel])[0])
    if variant in ("global", "at_zero"):
        sel = lx <= lx[0] + decade
        slopes.append(-_slope(lx[sel], lr[sel])[0])
    tail = max(slopes)
    j = int(np.nanargmax(np.where(np.isnan(lr), -np.inf, lr))) if len(lr) else 0
    holds = bool(finite and lr[j] <= math.log(k_max) and tail <= trend_tol)
    with np.errstate(over="ignore"):
        sup = float(np.exp(lr[j]))
    return Delta2Report(variant, holds, sup, float(x[j]), x, np.exp(np.minimum(lr, _LOG_FLOAT_MAX)),
                        (lo, hi), float(tail))


# --------------------------------------------------------------------------
# ordering relations

class Relation(str, Enum):
    stronger = "stronger"
    essentially_stronger = "essentially_stronger"
    completely_stronger = "completely_stronger"


@dataclass(frozen=True)
class OrderingReport:
    relation: Relation
    holds: bool
    witness_a: float
    witness_x0: float
    witness_K: float
    violations: list
    log_x0: float = math.nan
    probe_range: tuple = ()
    per_a: list = field(default_factory=list, repr=False)


def _ordering_grid(phi1: NFunction, phi2: NFunction, probe: ProbeConfig) -> np.ndarray:
    s = np.linspace(math.log(probe.lo), math.log(probe.hi), probe.points)
    both_loglog = phi1.log_eval_exp is not None and phi2.log_eval_exp is not None
    smax = probe.extended_log_max if both_loglog else min(probe.extended_log_max, _LOG_FLOAT_MAX - 5)
    if smax > s[-1] * 1.01 and (phi1.log_eval is not None or phi1.log_eval_exp is not None):
        ext = np.geomspace(s[-1], smax, probe.extended_points + 1)[1:]
        s = np.concatenate([s, ext])
    return s


def _tail_start(ok: np.ndarray, valid: np.ndarray, min_tail: int):
    """Index where the final all-satisfied run of valid probes begins."""
    idx = np.flatnonzero(valid)
    if len(idx) == 0:
        return None
    bad = idx[~ok[idx]]
    start_pos = 0 if len(bad) == 0 else int(np.searchsorted(idx, bad[-1], side="right"))
    if len(idx) - start_pos < min_tail:
        return None
    return int(idx[start_pos])


def check_ordering(phi1: NFunction, phi2: NFunction, relation, probe: ProbeConfig = ProbeConfig(),
                   a_grid: Optional[np.ndarray] = None, min_tail: int = 8,
                   trend_tol: float = 1e-3) -> OrderingReport:
    """Probe ``Phi1(x) <= K*Phi2(a*x)`` for ``x >= x0`` in log coordinates.

    * ``stronger``: some ``a`` on an ascending grid admits an ``x0``.
    * ``essentially_stronger``: every ``a`` on a descending grid down to 1e-3
      admits an ``x0(a)``.
    * ``completely_stronger``: every such ``a`` admits a finite ``K(a)``,
      fitted as the tail maximum of ``Phi1(x)/Phi2(a*x)``.
    """
    relation = Relation(relation)
    s = _ordering_grid(phi1, phi2, probe)
    l1 = phi1.log_value_exp(s)
    if a_grid is None:
        a_grid = np.logspace(-3, 3, 25) if relation is Relation.stronger else np.logspace(1, -3, 17)
    per_a = []
    violations = []
    for a in a_grid:
        l2 = phi2.log_value_exp(s + math.log(a))
        valid = np.isfinite(l1) & ~np.isnan(l2)
        valid &= ~(np.isposinf(l1) & np.isposinf(l2))
        diff = l2 - l1
        if relation is Relation.completely_stronger:
            vidx = np.flatnonzero(valid)
            if len(vidx) < 2 * min_tail:
                per_a.append((a, False, math.nan, math.inf))
                violations.append((float(a), math.nan))
                continue
            tail = vidx[len(vidx) // 2:]
            gap = -diff[tail]
            quarter = tail[len(tail) // 2:]
            trend = _slope(s[quarter], -diff[quarter])[0]
            bounded = bool(np.all(np.isfinite(gap)) and (trend <= trend_tol or np.max(gap) <= 0))
            logK = float(max(np.max(gap), 0.0)) if bounded else math.inf
            per_a.append((a, bounded, float(s[tail[0]]), logK))
            if not bounded:
                violations.append((float(a), float(s[tail[-1]])))
            continue
        ok = diff >= -1e-12 * np.maximum(1.0, np.abs(l1))
        start = _tail_start(ok, valid, min_tail)
        if start is None:
            per_a.append((a, False, math.nan, 0.0))
            bad = np.flatnonzero(valid & ~ok)
            violations.append((float(a), float(s[bad[-1]]) if len(bad) else math.nan))
        else:
            per_a.append((a, True, float(s[start]), 0.0))

    def x0_of(ls):
        return math.exp(ls) if ls < _LOG_FLOAT_MAX else math.inf

    if relation is Relation.stronger:
        good = [r for r in per_a if r[1]]
        holds = bool(good)
        w = good[0] if good else per_a[-1]
    else:
        holds = all(r[1] for r in per_a)
        w = per_a[-1]
    log_x0, logK = w[2], w[3]
    K = math.exp(logK) if logK < _LOG_FLOAT_MAX else math.inf
    return OrderingReport(relation, holds, float(w[0]),
                          x0_of(log_x0) if np.isfinite(log_x0) else math.nan, K,
                          violations, log_x0, (float(np.exp(s[0])), float(s[-1])), per_a)


# --------------------------------------------------------------------------
# power bounds

def power_bounds(eta: NFunction, epsilon: float, probe: ProbeConfig = ProbeConfig(),
                 grid_points: int = 65) -> float:
    """Smallest ``K`` making the two-sided power estimates hold on the probes.

    ``K**-1 * min(t**(b+e), t**(a-e)) * eta(u) <= eta(t*u) <= K * max(...) * eta(u)``
    with ``a, b`` the estimated indices; ``K >= 1`` always (``t = 1``).
    """
    if epsilon <= 0:
        raise BadParam("epsilon must be positive")
    d2 = check_delta2(eta, "global", probe)
    if not d2.holds:
        raise Delta2Violated(f"{eta.name} fails the Delta_2 scan (sup ratio {d2.sup_ratio:.3g} at x={d2.worst_x:.3g})")
    idx = mo_indices(eta, IndexProbeConfig(u_lo=probe.lo, u_hi=probe.hi))
    if not (np.isfinite(idx.alpha) and np.isfinite(idx.beta)):
        raise Delta2Violated(f"non-finite index estimate for {eta.name}")
    g = np.geomspace(probe.lo, probe.hi, grid_points)
    t, u = np.meshgrid(g, g, indexing="ij")
    lt = np.log(t)
    lr = _checked_log(eta, t * u) - _checked_log(eta, u)
    hi_exp = np.maximum((idx.beta + epsilon) * lt, (idx.alpha - epsilon) * lt)
    lo_exp = np.minimum((idx.beta + epsilon) * lt, (idx.alpha - epsilon) * lt)
    logK = float(np.max(np.maximum(lr - hi_exp, lo_exp - lr)))
    if not np.isfinite(logK):
        raise Delta2Violated(f"no finite constant fits the probes for {eta.name}")
    return math.exp(max(logK, 0.0))

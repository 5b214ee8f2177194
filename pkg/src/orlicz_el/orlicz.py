"""Discretized Orlicz-space calculus on a periodic uniform grid over ``[0, T]``.

All integrals use the rectangle rule ``(T/N) * sum_j``, which on a periodic
grid coincides with the composite trapezoid rule and is exact for the
piecewise-constant derivatives produced by :func:`derivative`.

The ``*_rows`` helpers work on a stack of sampled functions at once (one per
row of an ``(M, N)`` array of pointwise magnitudes); the public functions
are thin wrappers around them.  Batching is what keeps the 10**4-sample
inequality sweeps fast.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import BadParam, BracketExpansionFailed, DomainOverflow
from .nfunction import NFunction, conjugate, inverse

GOLDEN_TOL = 1e-10
LUX_TOL = 1e-10
MAX_EXPANSIONS = 60
_INV_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


class GridFunction:
    """Periodic ``R^d``-valued samples ``u(t_j)``, ``t_j = j T / N``.

    Node ``N`` is node ``0``, so periodicity holds by construction.  The
    value array is copied and made read-only.
    """

    __slots__ = ("_T", "_values")

    def __init__(self, period_T: float, values):
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise BadParam("values must be an N x d array")
        if not period_T > 0:
            raise BadParam("period_T must be positive")
        if v.shape[0] < 4:
            raise BadParam("a grid function needs at least 4 nodes")
        if v.shape[1] < 1:
            raise BadParam("dimension must be at least 1")
        v.setflags(write=False)
        self._T = float(period_T)
        self._values = v

    @property
    def period_T(self) -> float:
        return self._T

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def nodes(self) -> int:
        return self._values.shape[0]

    @property
    def dim(self) -> int:
        return self._values.shape[1]

    @property
    def step(self) -> float:
        return self._T / self.nodes

    def times(self) -> np.ndarray:
        return np.arange(self.nodes) * self.step

    def magnitude(self) -> np.ndarray:
        """Euclidean norm of the value at every node."""
        v = self._values
        return np.abs(v[:, 0]) if v.shape[1] == 1 else np.linalg.norm(v, axis=1)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self._T, values)

    def __mul__(self, a: float) -> "GridFunction":
        return GridFunction(self._T, self._values * float(a))

    __rmul__ = __mul__

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self._T, self._values + other._values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self._T, self._values - other._values)

    def __repr__(self):
        return f"GridFunction(T={self._T:g}, N={self.nodes}, d={self.dim})"

    @classmethod
    def from_function(cls, f, period_T: float, nodes: int, dim: int = 1) -> "GridFunction":
        t = np.arange(nodes) * (period_T / nodes)
        v = np.asarray(f(t), dtype=float)
        if v.ndim == 0:
            v = np.full((nodes, dim), float(v))
        return cls(period_T, v.reshape(nodes, -1))

    @classmethod
    def constant(cls, c, period_T: float, nodes: int) -> "GridFunction":
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls(period_T, np.tile(c, (nodes, 1)))


def _same_grid(u: GridFunction, v: GridFunction):
    if u.nodes != v.nodes or u.dim != v.dim or u.period_T != v.period_T:
        raise BadParam(f"grid mismatch: {u!r} vs {v!r}")


# --------------------------------------------------------------------------
# modulars

def modular_rows(phi: NFunction, mags: np.ndarray, w: float) -> np.ndarray:
    """``w * sum_j Phi(mags[..., j])`` along the last axis."""
    with np.errstate(over="ignore"):
        vals = phi.eval(mags)
    return w * np.sum(vals, axis=-1)


def log_modular_rows(phi: NFunction, mags: np.ndarray, w: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lv = phi.log_value(mags)
    return logsumexp(lv, axis=-1) + math.log(w)


def modular(phi: NFunction, u: GridFunction) -> float:
    """``rho_Phi(u) = int_0^T Phi(|u|) dt``."""
    val = float(modular_rows(phi, u.magnitude(), u.step))
    if not np.isfinite(val):
        raise DomainOverflow(f"modular of {phi.name} overflows; use log_modular")
    return val


def log_modular(phi: NFunction, u: GridFunction) -> float:
    """``log rho_Phi(u)`` evaluated through ``Phi.log_value`` (overflow safe)."""
    return float(log_modular_rows(phi, u.magnitude(), u.step))


# --------------------------------------------------------------------------
# norms

def _log_rho_scaled(phi: NFunction, mags: np.ndarray, w: float, logc: np.ndarray) -> np.ndarray:
    """``log rho(c * u)`` per row, with ``c = exp(logc)`` given per row."""
    scaled = mags * np.exp(logc)[:, None]
    if phi.log_eval is not None:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return log_modular_rows(phi, scaled, w)
    with np.errstate(divide="ignore", over="ignore"):
        return np.log(modular_rows(phi, scaled, w))


def luxemburg_rows(phi: NFunction, mags: np.ndarray, w: float, tol: float = LUX_TOL) -> np.ndarray:
    """Luxemburg norm per row: the ``lam`` with ``rho(u / lam) = 1``.

    Bisection on ``log lam``; ``lam -> rho(u/lam)`` is nonincreasing.
    """
    mags = np.atleast_2d(np.asarray(mags, dtype=float))
    out = np.zeros(mags.shape[0])
    nz = np.max(mags, axis=1) > 0
    if not nz.any():
        return out
    # work with u / max|u| so that extreme magnitudes cannot overflow the scale
    top = np.max(mags[nz], axis=1)
    m = mags[nz] / top[:, None]
    lo = np.full(len(top), -1.0)
    hi = np.full(len(top), 1.0)
    for _ in range(MAX_EXPANSIONS * 4):
        f_lo = _log_rho_scaled(phi, m, w, -lo)
        bad = ~(f_lo >= 0)
        if not bad.any():
            break
        lo = np.where(bad, lo - 2.0 * (1 + np.abs(lo - hi)), lo)
    else:
        raise BracketExpansionFailed("Luxemburg bracket (lower end) did not close")
    for _ in range(MAX_EXPANSIONS * 4):
        f_hi = _log_rho_scaled(phi, m, w, -hi)
        bad = f_hi > 0
        if not bad.any():
            break
        hi = np.where(bad, hi + 2.0 * (1 + np.abs(hi - lo)), hi)
    else:
        raise BracketExpansionFailed("Luxemburg bracket (upper end) did not close")
    # bisection down to a relative width of 1e-15 on lam, then the
    # modular criterion |rho - 1| <= tol is verified on the result
    for _ in range(200):
        if np.all(hi - lo <= 1e-15):
            break
        mid = 0.5 * (lo + hi)
        f = _log_rho_scaled(phi, m, w, -mid)
        above = f > 0
        lo = np.where(above, mid, lo)
        hi = np.where(~above, mid, hi)
    out[nz] = top * np.exp(hi)
    return out


def _g_log(phi: NFunction, mags: np.ndarray, w: float, logk: np.ndarray) -> np.ndarray:
    """``log((1 + rho(k u)) / k)`` per row."""
    lr = _log_rho_scaled(phi, mags, w, logk)
    return np.logaddexp(0.0, lr) - logk


def amemiya_rows(phi: NFunction, mags: np.ndarray, w: float, lux: Optional[np.ndarray] = None,
                 tol: float = GOLDEN_TOL):
    """Amemiya norm ``min_k (1 + rho(k u)) / k`` per row; returns ``(norm, k*)``.

    Golden-section search on ``log k``.  The map ``k -> (1 + rho(k u))/k`` is
    unimodal (``k rho'(k) - rho(k)`` is nondecreasing), so the bracket
    ``[1/(2 lux), 2/lux]`` is widened until the minimum is interior.
    """
    mags = np.atleast_2d(np.asarray(mags, dtype=float))
    M = mags.shape[0]
    norm = np.zeros(M)
    kstar = np.zeros(M)
    nz = np.max(mags, axis=1) > 0
    if not nz.any():
        return norm, kstar
    # (1 + rho(k u)) / k = max|u| (1 + rho(kappa v)) / kappa with v = u / max|u|, kappa = k max|u|
    top = np.max(mags[nz], axis=1)
    m = mags[nz] / top[:, None]
    if lux is None:
        lux = luxemburg_rows(phi, m, w)
    else:
        lux = np.asarray(lux, dtype=float)[nz] / top
    a = -np.log(lux) - math.log(2.0)
    b = -np.log(lux) + math.log(2.0)
    for _ in range(MAX_EXPANSIONS + 1):
        ga, gb = _g_log(phi, m, w, a), _g_log(phi, m, w, b)
        inner = 0.5 * (a + b)
        gi = _g_log(phi, m, w, inner)
        left = ga <= gi
        right = (gb <= gi) & ~left
        if not (left.any() or right.any()):
            break
        width = b - a
        a = np.where(left, a - width, a)
        b = np.where(right, b + width, b)
    else:
        raise BracketExpansionFailed(f"Amemiya bracket for {phi.name} did not close after {MAX_EXPANSIONS} expansions")
    c = b - _INV_GOLD * (b - a)
    d = a + _INV_GOLD * (b - a)
    gc, gd = _g_log(phi, m, w, c), _g_log(phi, m, w, d)
    n_iter = int(math.ceil(math.log(tol / float(np.max(b - a))) / math.log(_INV_GOLD))) + 1
    for _ in range(max(n_iter, 1)):
        left = gc <= gd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - _INV_GOLD * (b - a), d)
        d_new = np.where(left, c, a + _INV_GOLD * (b - a))
        g_new = _g_log(phi, m, w, np.where(left, c_new, d_new))
        gc, gd = np.where(left, g_new, gd), np.where(left, gc, g_new)
        c, d = c_new, d_new
    best = np.where(gc <= gd, c, d)
    cand = np.stack([a, c, d, b, best])
    gv = np.stack([_g_log(phi, m, w, x) for x in cand])
    j = np.argmin(gv, axis=0)
    logk = cand[j, np.arange(len(j))]
    norm[nz] = top * np.exp(gv[j, np.arange(len(j))])
    kstar[nz] = np.exp(logk) / top
    return norm, kstar


@dataclass(frozen=True)
class NormReport:
    luxemburg: float
    amemiya: float
    k_star: float
    modular_at_unit: float


def luxemburg_norm(phi: NFunction, u: GridFunction, tol: float = LUX_TOL) -> float:
    """``inf{lam > 0 : rho_Phi(u / lam) <= 1}``."""
    return float(luxemburg_rows(phi, u.magnitude()[None, :], u.step, tol)[0])


def orlicz_norm(phi: NFunction, u: GridFunction, tol: float = GOLDEN_TOL) -> NormReport:
    """Orlicz norm through the Amemiya formula, with the Luxemburg norm alongside."""
    mags = u.magnitude()[None, :]
    lux = luxemburg_rows(phi, mags, u.step)
    if lux[0] == 0:
        return NormReport(0.0, 0.0, 0.0, 0.0)
    am, k = amemiya_rows(phi, mags, u.step, lux, tol)
    unit = float(np.exp(_log_rho_scaled(phi, mags, u.step, -np.log(lux))[0]))
    return NormReport(float(lux[0]), float(am[0]), float(k[0]), unit)


# --------------------------------------------------------------------------
# decomposition and derivative

def decompose(u: GridFunction):
    """``(mean, tilde)`` with ``u = mean + tilde`` and ``tilde`` of zero mean."""
    mean = np.mean(u.values, axis=0)
    return mean, u.with_values(u.values - mean[None, :])


def derivative(u: GridFunction) -> GridFunction:
    """Forward differences ``(u_{j+1} - u_j) N / T`` (index mod N), one per interval."""
    v = u.values
    return u.with_values((np.roll(v, -1, axis=0) - v) / u.step)


# --------------------------------------------------------------------------
# inequalities

@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool


SLACK_FLOOR = -1e-7


def _report(name: str, lhs: float, rhs: float, floor: float = SLACK_FLOOR) -> InequalityReport:
    slack = rhs - lhs
    return InequalityReport(name, float(lhs), float(rhs), float(slack),
                            bool(slack >= floor * max(abs(rhs), 1e-300) or slack >= 0))


def holder_check(u: GridFunction, v: GridFunction, phi: NFunction,
                 psi: Optional[NFunction] = None) -> InequalityReport:
    """``|int u.v| <= ||u||_Phi ||v||_Psi`` with both Orlicz norms."""
    _same_grid(u, v)
    psi = conjugate(phi) if psi is None else psi
    lhs = abs(u.step * float(np.sum(u.values * v.values)))
    if lhs == 0 and (not np.any(u.values) or not np.any(v.values)):
        return _report("holder", 0.0, 0.0)
    rhs = orlicz_norm(phi, u).amemiya * orlicz_norm(psi, v).amemiya
    return _report("holder", lhs, rhs)


def sobolev_constant(phi: NFunction, T: float) -> float:
    """``Phi^{-1}(1/T) * max(1, T)``."""
    return float(inverse(phi, 1.0 / T)) * max(1.0, T)


def wirtinger_constant(phi: NFunction, T: float) -> float:
    """``T * Phi^{-1}(1/T)``."""
    return T * float(inverse(phi, 1.0 / T))


def sobolev_check(u: GridFunction, phi: NFunction, constant_scale: float = 1.0):
    """Sobolev and Sobolev-Wirtinger bounds for ``u``; returns two reports.

    * ``max|u| <= Phi^{-1}(1/T) max(1, T) (||u||_Phi + ||u'||_Phi)``
    * ``max|u - mean| <= T Phi^{-1}(1/T) ||u'||_Phi``

    ``constant_scale`` multiplies both constants (a negative-control hook).
    """
    T = u.period_T
    du = derivative(u)
    nu = orlicz_norm(phi, u).amemiya
    ndu = orlicz_norm(phi, du).amemiya
    _, tilde = decompose(u)
    s_lhs = float(np.max(u.magnitude()))
    w_lhs = float(np.max(tilde.magnitude()))
    s_rhs = constant_scale * sobolev_constant(phi, T) * (nu + ndu)
    w_rhs = constant_scale * wirtinger_constant(phi, T) * ndu
    return _report("sobolev", s_lhs, s_rhs), _report("wirtinger", w_lhs, w_rhs)


# --------------------------------------------------------------------------
# norm equivalence and modular coercivity

def one_norm(phi: NFunction, T: float, nodes: int = 16) -> float:
    """Orlicz norm of the constant function 1 on ``[0, T]``."""
    return orlicz_norm(phi, GridFunction.constant(1.0, T, nodes)).amemiya


def equivalence_constants(phi: NFunction, T: float):
    """``(C3, C4)`` with ``||u||_W <= C3 (|mean| + ||u'||)`` and
    ``|mean| + ||u'|| <= C4 ||u||_W``, ``||u||_W = ||u||_Phi + ||u'||_Phi``.

    From ``||u|| <= ||1|| (|mean| + max|u - mean|)``, the Wirtinger bound and
    ``|mean| <= Phi^{-1}(1/T) ||u||`` (Hoelder against the constant 1).
    """
    one = one_norm(phi, T)
    wc = wirtinger_constant(phi, T)
    c3 = max(one, 1.0 + wc * one)
    c4 = max(1.0, float(inverse(phi, 1.0 / T)))
    return c3, c4


def sobolev_norm(phi: NFunction, u: GridFunction) -> float:
    return orlicz_norm(phi, u).amemiya + orlicz_norm(phi, derivative(u)).amemiya


@dataclass(frozen=True)
class CoercivitySweep:
    scales: np.ndarray
    log_ratios: np.ndarray
    k: float
    base_amplitude: float

    @property
    def ratios(self) -> np.ndarray:
        return np.exp(np.minimum(self.log_ratios, 700.0))

    @property
    def top_log_ratio(self) -> float:
        return float(self.log_ratios[-1])

    def eventually_increasing(self, last: int = 4) -> bool:
        return bool(np.all(np.diff(self.log_ratios[-last:]) > 0))


def modular_coercivity_sweep(phi: NFunction, phi0: NFunction, u0: GridFunction, k: float,
                             exponents: Sequence[int] = range(16)) -> CoercivitySweep:
    """``log(rho_Phi(s u0) / Phi0(k ||s u0||_Phi))`` for ``s = 2**e``.

    Uses homogeneity of the norm, so ``||u0||`` is computed once, and
    evaluates everything in log space.
    """
    norm0 = orlicz_norm(phi, u0).amemiya
    if norm0 == 0:
        raise BadParam("u0 must be nonzero")
    mags = u0.magnitude()
    scales = 2.0 ** np.asarray(list(exponents), dtype=float)
    lr = np.array([float(log_modular_rows(phi, s * mags, u0.step)) for s in scales])
    with np.errstate(divide="ignore"):
        l0 = phi0.log_value(k * scales * norm0)
    amp = float(np.max(mags))
    return CoercivitySweep(scales, lr - l0, float(k), amp)


# --------------------------------------------------------------------------
# CSV

def to_csv(u: GridFunction) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(u.dim)])
    for t, row in zip(u.times(), u.values):
        w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
    return buf.getvalue()


def write_csv(u: GridFunction, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(to_csv(u))


def from_csv(text: str, period_T: Optional[float] = None) -> GridFunction:
    """Parse ``t,x1,...,xd`` rows; spacing must be uniform to 1e-9 relative.

    ``period_T`` defaults to ``N * dt``.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise BadParam("empty CSV")
    head = [h.strip() for h in rows[0]]
    if len(head) < 2 or head[0] != "t" or head[1:] != [f"x{i + 1}" for i in range(len(head) - 1)]:
        raise BadParam(f"bad CSV header {rows[0]!r}; expected t,x1,...,xd")
    data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[0] < 4:
        raise BadParam("CSV needs at least 4 data rows")
    t = data[:, 0]
    dt = np.diff(t)
    h = (t[-1] - t[0]) / (len(t) - 1)
    if not h > 0 or np.max(np.abs(dt - h)) > 1e-9 * abs(h):
        raise BadParam("CSV time column is not uniformly spaced")
    T = h * len(t) if period_T is None else float(period_T)
    if not math.isclose(T, h * len(t), rel_tol=1e-9):
        raise BadParam(f"period {T} does not match N*dt = {h * len(t)}")
    return GridFunction(T, data[:, 1:])


def read_csv(path, period_T: Optional[float] = None) -> GridFunction:
    with open(path, encoding="utf-8") as fh:
        return from_csv(fh.read(), period_T)

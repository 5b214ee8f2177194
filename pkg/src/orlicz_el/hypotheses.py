"""Finite-probe checks of the growth, structure and coercivity hypotheses,
plus the diagnostic functionals ``J`` and ``H`` of the lower-bound chain.

Every verdict here is a heuristic computed on a seeded probe set; reports
carry the number of probes and the worst point found.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .construct import phi_star_from_indices
from .errors import BadParam, EvaluatorFailure, IndexViolated, OverflowInRatio
from .lagrangians import Lagrangian, Potential
from .nfunction import NFunction, builtin, check_delta2, check_ordering, conjugate, mo_indices
from .orlicz import GridFunction, decompose, derivative, log_modular, orlicz_norm
from .probes import HypothesisProbeConfig, IndexProbeConfig, ProbeConfig

Weight = Union[float, Callable, GridFunction]


def weight_at(w: Weight, t: np.ndarray) -> np.ndarray:
    """Evaluate a weight given as a constant, a callable or a periodic grid function."""
    t = np.asarray(t, dtype=float)
    if isinstance(w, GridFunction):
        vals = w.values[:, 0]
        T = w.period_T
        grid = np.append(w.times(), T)
        return np.interp(np.mod(t, T), grid, np.append(vals, vals[0]))
    if callable(w):
        return np.asarray(w(t), dtype=float) * np.ones_like(t)
    return np.full(t.shape, float(w))


@dataclass(frozen=True)
class GrowthEnvelope:
    """Data ``(a, b, c, lambda, f, Phi)`` of the structure bounds.

    ``a`` is a nondecreasing function of ``|x|``; ``b``, ``c``, ``f`` are
    nonnegative weights in ``t``.
    """

    a: Callable
    b: Weight
    c: Weight
    lam: float
    f: Weight
    phi: NFunction

    def __post_init__(self):
        if not self.lam > 0:
            raise BadParam("lambda must be positive")


@dataclass(frozen=True)
class HypothesisReport:
    condition: str
    passed: bool
    worst_point: tuple
    worst_slack: float
    probes: int
    required: bool = True
    detail: str = ""


@dataclass(frozen=True)
class CoercivityReport:
    condition: str
    passed: bool
    radii: np.ndarray
    log_ratios: np.ndarray
    threshold: float
    directions: int
    required: bool = True
    detail: str = ""

    @property
    def min_ratios(self) -> np.ndarray:
        return np.exp(np.minimum(self.log_ratios, 700.0))

    @property
    def worst_slack(self) -> float:
        return float(self.log_ratios[-1] - math.log(self.threshold))

    @property
    def probes(self) -> int:
        return len(self.radii) * self.directions


@dataclass(frozen=True)
class AuditReport:
    action: float
    bound: float
    gap: float
    C: float
    j_term: float
    h_term: float


# --------------------------------------------------------------------------
# probe sets

def _directions(d: int, n_random: int, rng) -> np.ndarray:
    eye = np.eye(d)
    dirs = [eye, -eye]
    if n_random:
        r = rng.normal(size=(n_random, d))
        dirs.append(r / np.linalg.norm(r, axis=1, keepdims=True))
    return np.vstack(dirs)


def _point_probes(T: float, d: int, cfg: HypothesisProbeConfig, with_y: bool = True):
    """``(t, x, y)`` probe arrays: a product grid plus seeded random draws."""
    rng = np.random.default_rng(cfg.seed)
    ts = np.linspace(0.0, T, cfg.t_points, endpoint=False)
    xr = np.concatenate([[0.0], np.geomspace(1e-3, cfg.x_max, cfg.x_points)])
    yr = np.concatenate([[0.0], np.geomspace(1e-3, cfg.y_max, cfg.y_points)]) if with_y else np.zeros(1)
    tt, xx, yy = (a.reshape(-1) for a in np.meshgrid(ts, xr, yr, indexing="ij"))
    n = len(tt)
    ex = _directions(d, 0, rng)[rng.integers(0, 2 * d, n)]
    ey = _directions(d, 0, rng)[rng.integers(0, 2 * d, n)]
    m = cfg.random
    tr = rng.uniform(0.0, T, m)
    xm = np.exp(rng.uniform(math.log(1e-3), math.log(cfg.x_max), m))
    ym = np.exp(rng.uniform(math.log(1e-3), math.log(cfg.y_max), m)) if with_y else np.zeros(m)
    dx = rng.normal(size=(m, d))
    dy = rng.normal(size=(m, d))
    dx /= np.linalg.norm(dx, axis=1, keepdims=True)
    dy /= np.linalg.norm(dy, axis=1, keepdims=True)
    t = np.concatenate([tt, tr])
    x = np.vstack([xx[:, None] * ex, xm[:, None] * dx])
    y = np.vstack([yy[:, None] * ey, ym[:, None] * dy])
    return t, x, y


def _call(fn, *args, what="callback"):
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.asarray(fn(*args), dtype=float)
    except Exception as exc:  # the callback is user code
        raise EvaluatorFailure(f"{what} raised {exc!r}") from exc
    if np.any(np.isnan(out)):
        j = int(np.flatnonzero(np.isnan(out.reshape(len(args[0]), -1)).any(axis=1))[0])
        raise EvaluatorFailure(f"{what} returned NaN at probe {j}")
    return out


def _nrm(v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(v.reshape(len(v), -1), axis=1)


def _verdict(condition, lhs, rhs, t, x, y, tol, required=True, detail=""):
    """``lhs <= rhs`` at all probes within ``tol * max(1, |rhs|)``."""
    with np.errstate(invalid="ignore"):
        slack = np.where(np.isposinf(rhs), np.inf, rhs - lhs)
        scaled = slack / np.maximum(1.0, np.where(np.isfinite(rhs), np.abs(rhs), 1.0))
    scaled = np.where(np.isnan(scaled), -np.inf, scaled)
    j = int(np.argmin(scaled))
    ok = bool(scaled[j] >= -tol)
    pt = (float(t[j]), x[j].tolist(), y[j].tolist() if y is not None else None)
    return HypothesisReport(condition, ok, pt, float(slack[j]), len(t), required, detail)


# --------------------------------------------------------------------------
# pointwise conditions

def check_structure(L: Lagrangian, env: GrowthEnvelope,
                    probes: HypothesisProbeConfig = HypothesisProbeConfig(), dim: int = 1) -> list:
    """Structure bounds on ``L``, ``D_x L`` and ``D_y L`` against the envelope."""
    t, x, y = _point_probes(L.period_T, dim, probes)
    Lv = _call(L.value, t, x, y, what="lagrangian")
    gx = _call(L.d_x, t, x, y, what="D_x lagrangian")
    gy = _call(L.d_y, t, x, y, what="D_y lagrangian")
    arg = _nrm(y) / env.lam + weight_at(env.f, t)
    a = np.asarray(env.a(_nrm(x)), dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        big = a * (weight_at(env.b, t) + env.phi.eval(arg))
        small = a * (weight_at(env.c, t) + env.phi.deriv(arg))
    return [_verdict("A1", np.abs(Lv), big, t, x, y, probes.tol),
            _verdict("A2", _nrm(gx), big, t, x, y, probes.tol),
            _verdict("A3", _nrm(gy), small, t, x, y, probes.tol)]


def check_potential_growth(F: Potential, a: Callable, b: Weight, T: float,
                           probes: HypothesisProbeConfig = HypothesisProbeConfig(), dim: int = 1):
    """``|F(t,x)| + |grad F(t,x)| <= a(|x|) b(t)``."""
    t, x, _ = _point_probes(T, dim, probes, with_y=False)
    lhs = np.abs(_call(F.value, t, x, what="potential")) + _nrm(_call(F.grad, t, x, what="potential gradient"))
    rhs = np.asarray(a(_nrm(x)), dtype=float) * weight_at(b, t)
    return _verdict("A", lhs, rhs, t, x, None, probes.tol)


def check_caratheodory(L: Lagrangian, probes: HypothesisProbeConfig = HypothesisProbeConfig(),
                       dim: int = 1) -> HypothesisReport:
    """Finite evaluability and continuity in ``x`` by shrinking finite differences.

    Measurability in ``t`` cannot be observed from samples and is not tested.
    """
    t, x, y = _point_probes(L.period_T, dim, probes)
    rng = np.random.default_rng(probes.seed + 1)
    e = rng.normal(size=x.shape)
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    L0 = _call(L.value, t, x, y, what="lagrangian")
    h = (1.0 + _nrm(x))[:, None] * e
    d1 = np.abs(_call(L.value, t, x + 1e-5 * h, y, what="lagrangian") - L0)
    d2 = np.abs(_call(L.value, t, x + 1e-8 * h, y, what="lagrangian") - L0)
    finite = np.isfinite(L0)
    floor = 1e-10 * (1.0 + np.abs(np.where(finite, L0, 0.0)))
    ok = finite & (d2 <= np.maximum(0.1 * d1, floor))
    slack = np.where(ok, 0.0, -1.0)
    j = int(np.argmin(slack))
    return HypothesisReport("C", bool(np.all(ok)), (float(t[j]), x[j].tolist(), y[j].tolist()),
                            float(slack[j]), len(t))


def check_lower_bound(L: Lagrangian, phi: NFunction, F: Potential,
                      probes: HypothesisProbeConfig = HypothesisProbeConfig(), dim: int = 1):
    """``L(t, x, y) >= Phi(|y|) + F(t, x)`` at every probe."""
    t, x, y = _point_probes(L.period_T, dim, probes)
    Lv = _call(L.value, t, x, y, what="lagrangian")
    with np.errstate(over="ignore"):
        rhs = phi.eval(_nrm(y)) + _call(F.value, t, x, what="potential")
    # reuse the ``lhs <= rhs`` verdict with the roles swapped
    return _verdict("A4", rhs, Lv, t, x, y, probes.tol)


def check_A5(F: Potential, b1: Weight, b2: Weight, phi0: NFunction,
             probes: HypothesisProbeConfig = HypothesisProbeConfig(), T: float = 1.0,
             dim: int = 1) -> HypothesisReport:
    """``|grad F(t, x)| <= b1(t) Phi0'(|x|) + b2(t)``."""
    t, x, _ = _point_probes(T, dim, probes, with_y=False)
    lhs = _nrm(_call(F.grad, t, x, what="potential gradient"))
    with np.errstate(over="ignore"):
        rhs = weight_at(b1, t) * phi0.deriv(_nrm(x)) + weight_at(b2, t)
    return _verdict("A5", lhs, rhs, t, x, None, probes.tol)


def psi1_of_phi0_prime(psi1: NFunction, phi0: NFunction) -> Callable:
    """``r -> Psi1(Phi0'(r))``."""
    def comp(r):
        with np.errstate(over="ignore"):
            return psi1.eval(phi0.deriv(np.asarray(r, dtype=float)))
    return comp


def _mean_potential(F: Potential, T: float, x: np.ndarray, nodes: int) -> np.ndarray:
    """``int_0^T F(t, x_i) dt`` for each row ``x_i`` (rectangle rule)."""
    t = np.arange(nodes) * (T / nodes)
    M = x.shape[0]
    tt = np.tile(t, M)
    xx = np.repeat(x, nodes, axis=0)
    with np.errstate(over="ignore"):
        vals = _call(F.value, tt, xx, what="potential").reshape(M, nodes)
    return (T / nodes) * np.sum(vals, axis=1)


def check_A6(F: Potential, phi0: NFunction, psi1: NFunction, T: float, radii: Sequence[float],
             threshold: float = 1e2, n_random: int = 32, seed: int = 0, dim: int = 1,
             nodes: int = 64) -> CoercivityReport:
    """``int_0^T F(t, r e) dt / Psi1(Phi0'(2r))`` along a direction design.

    Passes when the minimum-over-directions ratio increases over the last
    three radii and ends above ``threshold``.
    """
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 3 or np.any(np.diff(radii) <= 0) or not radii[0] > 0:
        raise BadParam("radii must be positive, increasing and have at least 3 entries")
    if math.log10(radii[-1] / radii[0]) < 3:
        raise BadParam("radii must span at least 3 decades")
    dirs = _directions(dim, n_random, np.random.default_rng(seed))
    log_num = np.empty((len(radii), len(dirs)))
    for i, r in enumerate(radii):
        integ = _mean_potential(F, T, r * dirs, nodes)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_num[i] = np.where(integ > 0, np.log(np.where(integ > 0, integ, 1.0)), -np.inf)
    with np.errstate(over="ignore"):
        inner = phi0.deriv(2 * radii)
    if np.any(~np.isfinite(inner)):
        raise OverflowInRatio(f"Phi0' overflows at radius {radii[np.argmax(~np.isfinite(inner))]:g}")
    with np.errstate(divide="ignore", over="ignore"):
        log_den = psi1.log_value(inner)
    bad = np.isposinf(log_den) & np.isfinite(np.max(log_num, axis=1))
    if np.any(bad):
        raise OverflowInRatio(f"Psi1(Phi0'(2r)) overflows at r={radii[np.argmax(bad)]:g} before the potential integral does")
    lr = np.min(log_num, axis=1) - log_den
    tail = lr[-3:]
    ok = bool(np.all(np.isfinite(tail)) and np.all(np.diff(tail) > 0)
              and tail[-1] > math.log(threshold))
    return CoercivityReport("A6", ok, radii, lr, float(threshold), len(dirs))


def check_convexity(L: Lagrangian, probes: HypothesisProbeConfig = HypothesisProbeConfig(),
                    dim: int = 1, strict_tol: float = 0.0) -> HypothesisReport:
    """Midpoint test of strict convexity in ``y`` (no Hessians needed)."""
    t, x, y1 = _point_probes(L.period_T, dim, probes)
    rng = np.random.default_rng(probes.seed + 2)
    y2 = y1 + rng.normal(size=y1.shape) * (0.1 + 0.5 * _nrm(y1))[:, None]
    Lm = _call(L.value, t, x, 0.5 * (y1 + y2), what="lagrangian")
    avg = 0.5 * (_call(L.value, t, x, y1, what="lagrangian") + _call(L.value, t, x, y2, what="lagrangian"))
    fin = np.isfinite(avg)
    gap = np.where(fin, avg - Lm, np.inf)
    rel = gap / np.maximum(1.0, np.abs(np.where(fin, avg, 1.0)))
    j = int(np.argmin(rel))
    ok = bool(np.all(gap > strict_tol * np.maximum(1.0, np.abs(np.where(fin, avg, 1.0)))))
    return HypothesisReport("convexity", ok, (float(t[j]), x[j].tolist(), y1[j].tolist()),
                            float(gap[j]), len(t))


# --------------------------------------------------------------------------
# diagnostic functionals

def _value(fn, r):
    v = fn(np.asarray(r, dtype=float)) if not isinstance(fn, NFunction) else fn.eval(np.asarray(r, dtype=float))
    return float(np.asarray(v).reshape(-1)[0])


def j_functional(C: float, phi_fun, phi: NFunction, u: GridFunction) -> float:
    """``rho_Phi(u) - C * phi_fun(||u||_Phi)`` (Orlicz norm)."""
    if not C > 0:
        raise BadParam("C must be positive")
    if not np.any(u.values):
        return -C * _value(phi_fun, 0.0)
    with np.errstate(over="ignore"):
        rho = math.exp(min(log_modular(phi, u), 709.0)) if log_modular(phi, u) < 709 else math.inf
    return rho - C * _value(phi_fun, orlicz_norm(phi, u).amemiya)


def h_functional(C: float, phi_fun, F: Potential, T: float, x, nodes: int = 256) -> float:
    """``int_0^T F(t, x) dt - C * phi_fun(2|x|)``."""
    if not C > 0:
        raise BadParam("C must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    integ = float(_mean_potential(F, T, x[None, :], nodes)[0])
    return integ - C * _value(phi_fun, 2.0 * float(np.linalg.norm(x)))


# --------------------------------------------------------------------------
# problem-level setup and gate

@dataclass(frozen=True)
class HypothesisSetup:
    """User-chosen auxiliary functions for the sublinear-growth hypotheses.

    ``psi1`` defaults to the conjugate of ``phi1``; ``nu`` (the exponent of
    the power minorant ``Phi*``) defaults to ``1 + 0.9 (alpha - 1)`` with
    ``alpha`` the estimated lower index of ``Phi``.
    """

    phi0: NFunction
    phi1: NFunction
    b1: Weight
    b2: Weight
    psi1: Optional[NFunction] = None
    nu: Optional[float] = None
    radii: tuple = tuple(np.logspace(0, 12, 13))
    threshold: float = 1e2
    envelope: Optional[GrowthEnvelope] = None

    def conj1(self) -> NFunction:
        return self.psi1 if self.psi1 is not None else conjugate(self.phi1)


@dataclass(frozen=True)
class GateReport:
    reports: tuple
    phi_star: Optional[NFunction] = None
    phi_delta2_inf: Optional[bool] = None
    probe_range: tuple = ()

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports if r.required)

    @property
    def failed(self) -> list:
        return [r.condition for r in self.reports if r.required and not r.passed]


def _ordering_report(name, phi_a, phi_b, probe):
    rep = check_ordering(phi_a, phi_b, "essentially_stronger", probe)
    detail = f"witness a={rep.witness_a:g} log_x0={rep.log_x0:.4g}"
    return HypothesisReport(name, rep.holds, (rep.witness_a, [rep.log_x0], None),
                            0.0 if rep.holds else -1.0, len(rep.per_a), True, detail)


def gate(problem, setup: Optional[HypothesisSetup] = None,
         probes: HypothesisProbeConfig = HypothesisProbeConfig(),
         nprobe: ProbeConfig = ProbeConfig()) -> GateReport:
    """Run every available check for a problem instance.

    Always: finite/continuous evaluation, lower bound ``L >= Phi(|y|) + F``,
    ``Psi in Delta_2`` at infinity and strict convexity in ``y``.  With a
    setup: the sublinear bound, the ``Phi0 << Phi1 << Phi*`` chain and the
    coercivity ratio.  ``Phi in Delta_2`` at infinity is reported but does
    not gate (discrete derivatives are bounded, so the distance condition it
    guarantees holds trivially).
    """
    L = problem.lagrangian
    F = problem.potential
    d = problem.dim
    phi = problem.phi
    reports = [check_caratheodory(L, probes, d)]
    if F is not None:
        reports.append(check_lower_bound(L, phi, F, probes, d))
    else:
        reports.append(HypothesisReport("A4", False, (), -math.inf, 0, True, "no potential split"))
    psi = conjugate(phi)
    d2psi = check_delta2(psi, "at_infinity", nprobe)
    reports.append(HypothesisReport("psi_delta2_inf", d2psi.holds, (d2psi.worst_x, [], None),
                                    float(math.log(d2psi.sup_ratio)) if d2psi.sup_ratio > 0 else 0.0,
                                    len(d2psi.grid), True, f"sup ratio {d2psi.sup_ratio:.6g}"))
    d2phi = check_delta2(phi, "at_infinity", nprobe)
    reports.append(HypothesisReport("phi_delta2_inf", d2phi.holds, (d2phi.worst_x, [], None),
                                    float(np.log(min(d2phi.sup_ratio, 1e300))), len(d2phi.grid),
                                    False, "informational"))
    reports.append(check_convexity(L, probes, d))
    phi_star = None
    if setup is not None:
        if setup.envelope is not None:
            reports.extend(check_structure(L, setup.envelope, probes, d))
        reports.append(check_A5(F, setup.b1, setup.b2, setup.phi0, probes, problem.period_T, d))
        alpha = mo_indices(phi, IndexProbeConfig(u_lo=nprobe.lo, u_hi=nprobe.hi)).alpha
        nu = setup.nu if setup.nu is not None else 1.0 + 0.9 * (alpha - 1.0)
        try:
            _, phi_star = phi_star_from_indices(phi, nu, nprobe)
        except IndexViolated as exc:
            reports.append(HypothesisReport("phi_star", False, (), -1.0, 0, True, str(exc)))
        else:
            reports.append(_ordering_report("chain_phi0_phi1", setup.phi0, setup.phi1, nprobe))
            reports.append(_ordering_report("chain_phi1_phistar", setup.phi1, phi_star, nprobe))
        try:
            reports.append(check_A6(F, setup.phi0, setup.conj1(), problem.period_T,
                                    setup.radii, setup.threshold, seed=probes.seed, dim=d))
        except OverflowInRatio as exc:
            reports.append(HypothesisReport("A6", False, (), -math.inf, 0, True, str(exc)))
    return GateReport(tuple(reports), phi_star, d2phi.holds, (nprobe.lo, nprobe.hi))


def lower_bound_audit(problem, u: GridFunction, C: float,
                      setup: Optional[HypothesisSetup] = None) -> AuditReport:
    """Compare ``I(u)`` with ``J_{C,Phi1}(u') + H_{C,Psi1 o Phi0'}(mean u) - C``.

    A diagnostic only; the constant of the lower-bound chain is existential,
    so ``C`` is supplied by the caller.
    """
    from .solver import action

    setup = setup if setup is not None else getattr(problem, "hypotheses", None)
    if setup is None:
        raise BadParam("lower_bound_audit needs a HypothesisSetup (phi0, phi1, psi1)")
    if not C > 0:
        raise BadParam("C must be positive")
    I = action(problem, u)
    du = derivative(u)
    mean, _ = decompose(u)
    j = j_functional(C, setup.phi1, problem.phi, du)
    h = h_functional(C, psi1_of_phi0_prime(setup.conj1(), setup.phi0), problem.potential,
                     problem.period_T, mean)
    bound = j + h - C
    return AuditReport(I, bound, I - bound, float(C), j, h)


# --------------------------------------------------------------------------
# envelopes for the registered lagrangians

def default_envelope(L: Lagrangian, phi: NFunction) -> Optional[GrowthEnvelope]:
    """Hand-derived structure envelopes for the shipped lagrangians."""
    if L.name == "quadratic_tracking":
        return GrowthEnvelope(lambda r: 2.0 * (1.0 + r) ** 2, 1.0, 1.0, 1.0, 0.0, builtin("power", p=2))
    if L.name.startswith("exp_cosh_sublinear"):
        sigma = L.params["sigma"]
        return GrowthEnvelope(lambda r: 10.0 * (1.0 + r ** sigma), 1.0, 1.0, 0.5, 0.0, phi)
    return None

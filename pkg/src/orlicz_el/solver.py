"""Direct-method minimization of the discrete periodic action.

Trajectories are periodic and piecewise linear between ``N`` nodes, so on
interval ``j`` the derivative is the constant ``(u_{j+1} - u_j) N / T``.
The action is evaluated with one midpoint sample per interval:

    I(u) = sum_j (T/N) L(t_{j+1/2}, (u_j + u_{j+1})/2, u'_j).

Descent directions are preconditioned by the periodic ``H^1`` Riesz map
``P = w (eps I + D^T D)`` (``w = T/N``, ``D`` the forward difference), which
is a cyclic tridiagonal matrix solved in the kernels module.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import kernels
from .errors import BadParam, DomainOverflow, HypothesisRejected, NotConverged
from .lagrangians import Lagrangian, Potential
from .nfunction import NFunction
from .orlicz import GridFunction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 50_000
    tol: float = 1e-8
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    precond_eps: float = 1e-3
    memory: int = 8
    method: str = "lbfgs"
    mean_radius: float = 1.0
    mean_steps: int = 10

    def __post_init__(self):
        if not self.tol > 0:
            raise BadParam("tolerance must be positive")
        if self.method not in ("lbfgs", "gradient"):
            raise BadParam("method must be 'lbfgs' or 'gradient'")


@dataclass(frozen=True)
class ProblemSpec:
    lagrangian: Lagrangian
    phi: NFunction
    period_T: float = 1.0
    dim: int = 1
    grid_N: int = 256
    potential: Optional[Potential] = None
    options: SolverOptions = field(default_factory=SolverOptions)
    hypotheses: Optional[object] = None  # a HypothesisSetup (phi0, phi1, psi1, ...)

    def __post_init__(self):
        if self.grid_N < 8:
            raise BadParam("grid_N must be at least 8")
        if not self.period_T > 0:
            raise BadParam("period_T must be positive")
        if self.dim < 1:
            raise BadParam("dim must be at least 1")
        if self.potential is None and self.lagrangian.potential is not None:
            object.__setattr__(self, "potential", self.lagrangian.potential)

    @property
    def step(self) -> float:
        return self.period_T / self.grid_N

    def midtimes(self) -> np.ndarray:
        return (np.arange(self.grid_N) + 0.5) * self.step

    def times(self) -> np.ndarray:
        return np.arange(self.grid_N) * self.step

    def with_grid(self, N: int) -> "ProblemSpec":
        return replace(self, grid_N=int(N))


@dataclass(frozen=True)
class MeanSearch:
    """Start from the best constant trajectory ``u = r k e_i``, ``k = 0..steps``."""

    radius: Optional[float] = None
    steps: Optional[int] = None


@dataclass
class SolveResult:
    minimizer: GridFunction
    action: float
    el_residual_max: float
    el_residual_l2: float
    boundary_gap: float
    iterations: int
    converged: bool
    action_history: list
    grad_norm: float = math.nan
    message: str = ""
    backend: str = kernels.BACKEND


def _check_grid(problem: ProblemSpec, u: GridFunction):
    if u.nodes != problem.grid_N or u.dim != problem.dim or not math.isclose(u.period_T, problem.period_T):
        raise BadParam(f"{u!r} is not on the problem grid (N={problem.grid_N}, d={problem.dim}, T={problem.period_T})")


def _values(problem, u) -> np.ndarray:
    if isinstance(u, GridFunction):
        _check_grid(problem, u)
        return np.ascontiguousarray(u.values)
    v = np.ascontiguousarray(u, dtype=float)
    return v.reshape(problem.grid_N, problem.dim)


def _shifted_action(problem: ProblemSpec, v: np.ndarray) -> float:
    """Action minus ``T * baseline``; NaN and overflow map to ``+inf``."""
    w = problem.step
    x, y = kernels.stencil(v, w)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = problem.lagrangian.shifted(problem.midtimes(), x, y)
    total = w * float(np.sum(vals))
    if math.isnan(total):
        return math.inf
    return total


def _action_values(problem: ProblemSpec, v: np.ndarray) -> float:
    return problem.period_T * problem.lagrangian.baseline + _shifted_action(problem, v)


def action(problem: ProblemSpec, u) -> float:
    """Discrete action; raises :class:`DomainOverflow` if it is not finite."""
    val = _action_values(problem, _values(problem, u))
    if not np.isfinite(val):
        raise DomainOverflow("the action overflows at this trajectory")
    return val


def _gradient_values(problem: ProblemSpec, v: np.ndarray) -> np.ndarray:
    w = problem.step
    x, y = kernels.stencil(v, w)
    t = problem.midtimes()
    L = problem.lagrangian
    with np.errstate(over="ignore", invalid="ignore"):
        gx = np.ascontiguousarray(L.d_x(t, x, y), dtype=float).reshape(v.shape)
        gy = np.ascontiguousarray(L.d_y(t, x, y), dtype=float).reshape(v.shape)
    return kernels.scatter(gx, gy, w)


def action_gradient(problem: ProblemSpec, u) -> GridFunction:
    """Exact gradient of the discrete action with respect to the node values."""
    g = _gradient_values(problem, _values(problem, u))
    if not np.all(np.isfinite(g)):
        raise DomainOverflow("the action gradient overflows at this trajectory")
    return GridFunction(problem.period_T, g)


def el_residual(problem: ProblemSpec, u):
    """Weak Euler-Lagrange residual against the periodic hat functions.

    ``r_j = sum_intervals (D_y L . v_j' + D_x L . v_j) (T/N)`` with the same
    midpoint quadrature as the action, so ``r`` coincides with the gradient
    of the discrete action.  Returns ``(max |r_j|, l2, r)`` where ``l2`` is
    the discrete ``L^2`` norm of the nodal strong residual ``r_j / w``.
    """
    v = _values(problem, u)
    r = _gradient_values(problem, v)
    mags = np.linalg.norm(r, axis=1)
    l2 = float(np.linalg.norm(r) / math.sqrt(problem.step))
    return float(np.max(mags)), l2, r


def grad_norm(problem: ProblemSpec, g: np.ndarray) -> float:
    return float(np.linalg.norm(g) / math.sqrt(problem.step))


def boundary_check(problem: ProblemSpec, u) -> float:
    """``|D_y L(0, u_0, u'(0+)) - D_y L(T, u_0, u'(T-))|``."""
    v = _values(problem, u)
    w = problem.step
    y_first = (v[1] - v[0]) / w
    y_last = (v[0] - v[-1]) / w
    L = problem.lagrangian
    x0 = v[:1]
    a = L.d_y(np.array([0.0]), x0, y_first[None, :])
    b = L.d_y(np.array([problem.period_T]), x0, y_last[None, :])
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


class _Preconditioner:
    def __init__(self, problem: ProblemSpec):
        w = problem.step
        eps = problem.options.precond_eps
        self.diag = w * eps + 2.0 / w
        self.off = -1.0 / w

    def solve(self, g: np.ndarray) -> np.ndarray:
        return kernels.cyclic_solve(self.diag, self.off, np.ascontiguousarray(g))

    def apply(self, p: np.ndarray) -> np.ndarray:
        return self.diag * p + self.off * (np.roll(p, 1, axis=0) + np.roll(p, -1, axis=0))


def _mean_search(problem: ProblemSpec, init: MeanSearch) -> np.ndarray:
    r = problem.options.mean_radius if init.radius is None else init.radius
    steps = problem.options.mean_steps if init.steps is None else init.steps
    best, best_val = None, math.inf
    d = problem.dim
    for axis in range(d):
        for sign in (1.0, -1.0):
            for k in range(steps + 1):
                c = np.zeros(d)
                c[axis] = sign * k * r
                v = np.tile(c, (problem.grid_N, 1))
                val = _action_values(problem, v)
                if val < best_val:
                    best, best_val = v, val
    if best is None:
        raise DomainOverflow("every constant trajectory in the mean search overflows")
    return best


def minimize(problem: ProblemSpec, init: Union[GridFunction, MeanSearch, None] = None,
             gate=None, force: bool = False, raise_on_failure: bool = False) -> SolveResult:
    """Minimize the discrete action by preconditioned descent with Armijo backtracking.

    ``gate`` is a hypothesis gate (see :mod:`orlicz_el.hypotheses`) or a list
    of reports; when any required report fails the run is refused with
    :class:`HypothesisRejected` unless ``force`` is set.

    ``method="lbfgs"`` uses limited-memory quasi-Newton directions whose
    initial inverse Hessian is the preconditioner; ``method="gradient"`` uses
    the plain preconditioned gradient with a Barzilai-Borwein trial step.
    Either way each step must pass the Armijo test, so the action history
    is nonincreasing, and any overflow in a trial step counts as ``+inf``.
    """
    if gate is not None and not force:
        reports = getattr(gate, "reports", gate)
        failed = [r for r in reports if getattr(r, "required", True) and not r.passed]
        if failed:
            names = ", ".join(r.condition for r in failed)
            raise HypothesisRejected(f"hypothesis checks failed: {names}", gate)
    opts = problem.options
    if init is None:
        init = MeanSearch()
    v = _mean_search(problem, init) if isinstance(init, MeanSearch) else _values(problem, init).copy()
    pre = _Preconditioner(problem)

    base = problem.period_T * problem.lagrangian.baseline
    f = _shifted_action(problem, v)
    if not np.isfinite(f):
        raise DomainOverflow("the action is not finite at the initial trajectory")
    g = _gradient_values(problem, v)
    history = [base + f]
    s_hist, y_hist = [], []
    step0 = 1.0
    it = 0
    with np.errstate(over="ignore"):
        gn = grad_norm(problem, g)
    converged = gn <= opts.tol
    message = "converged" if converged else ""
    while not converged and it < opts.max_iter:
        it += 1
        if opts.method == "lbfgs":
            d = -_two_loop(g, s_hist, y_hist, pre)
            alpha = 1.0
        else:
            d = -pre.solve(g)
            alpha = step0
        with np.errstate(over="ignore", invalid="ignore"):
            slope = float(np.sum(g * d))
        if not np.isfinite(slope):
            # gradients near the overflow edge: shrink the direction to unit sup norm
            d = d / np.max(np.abs(d))
            slope = float(np.sum(g * d))
        if not slope < 0:
            s_hist.clear()
            y_hist.clear()
            d = -pre.solve(g)
            with np.errstate(over="ignore"):
                slope = float(np.sum(g * d))
            if not np.isfinite(slope):
                d = d / np.max(np.abs(d))
                slope = float(np.sum(g * d))
            alpha = 1.0
        accepted = False
        for _ in range(opts.max_backtracks):
            v_new = v + alpha * d
            f_new = _shifted_action(problem, v_new)
            if np.isfinite(f_new) and f_new <= f + opts.armijo * alpha * slope:
                g_new = _gradient_values(problem, v_new)
                if np.all(np.isfinite(g_new)):
                    accepted = True
                    break
            alpha *= opts.backtrack
        if not accepted:
            message = "line search failed"
            break
        s = v_new - v
        yv = g_new - g
        sy = float(np.sum(s * yv))
        if opts.method == "lbfgs":
            if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
                s_hist.append(s)
                y_hist.append(yv)
                if len(s_hist) > opts.memory:
                    s_hist.pop(0)
                    y_hist.pop(0)
        else:
            ps = pre.apply(s)
            step0 = float(np.sum(s * ps)) / sy if sy > 0 else 1.0
            step0 = min(max(step0, 1e-12), 1e12)
        v, f, g = v_new, f_new, g_new
        history.append(base + f)
        with np.errstate(over="ignore"):
            gn = grad_norm(problem, g)
        if log.isEnabledFor(logging.DEBUG) and it % 100 == 0:
            log.debug("iter %d action %.16g grad %.3e", it, f, gn)
        if gn <= opts.tol:
            converged = True
            message = "converged"
        elif not np.any(s):
            message = "stalled"
            break
    if not message:
        message = "iteration limit reached"
    u = GridFunction(problem.period_T, v)
    rmax, rl2, _ = el_residual(problem, u)
    res = SolveResult(u, base + f, rmax, rl2, boundary_check(problem, u), it, converged, history, gn, message)
    if not converged and raise_on_failure:
        raise NotConverged(f"solver stopped: {message} (grad {gn:.3e})", res)
    return res


def _two_loop(g, s_hist, y_hist, pre):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / float(np.sum(y * s))
        a = rho * float(np.sum(s * q))
        alphas.append((a, rho))
        q -= a * y
    r = pre.solve(q)
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        # scale the preconditioner so it matches the most recent curvature
        gamma = float(np.sum(s * y)) / float(np.sum(y * pre.solve(y)))
        r *= gamma
    for (a, rho), s, y in zip(reversed(alphas), s_hist, y_hist):
        b = rho * float(np.sum(y * r))
        r += (a - b) * s
    return r

"""Lagrangians ``L(t, x, y)`` with their partial gradients, and a registry.

All callbacks are vectorized: ``t`` has shape ``(M,)`` and ``x``, ``y`` have
shape ``(M, d)``.  Values have shape ``(M,)``, gradients ``(M, d)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import BadParam


def _norm(v: np.ndarray) -> np.ndarray:
    return np.abs(v[:, 0]) if v.shape[1] == 1 else np.linalg.norm(v, axis=1)


def _unit(v: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``v / |v|`` with the value 0 at the origin."""
    safe = np.where(r > 0, r, 1.0)
    return np.where((r > 0)[:, None], v / safe[:, None], 0.0)


@dataclass(frozen=True)
class Potential:
    """``F(t, x)`` and ``grad_x F(t, x)``."""

    name: str
    value: Callable
    grad: Callable
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Lagrangian:
    """``L(t, x, y)`` with ``D_x L`` and ``D_y L``.

    When ``L = kinetic(|y|) + F(t, x)`` the pieces are kept in ``kinetic``
    (a scalar function of ``|y|``) and ``potential`` so that the hypothesis
    checks and the lower-bound audit can use them.
    """

    name: str
    value: Callable
    d_x: Callable
    d_y: Callable
    params: Mapping[str, float] = field(default_factory=dict)
    potential: Optional[Potential] = None
    kinetic: Optional[Callable] = None
    period_T: float = 1.0
    exact: Optional[Callable] = None  # analytic minimizer t -> (M, d), when known
    baseline: float = 0.0
    excess: Optional[Callable] = None

    def shifted(self, t, x, y):
        """``L - baseline``, computed without cancellation when possible."""
        if self.excess is not None:
            return self.excess(t, x, y)
        return self.value(t, x, y) - self.baseline

    def __call__(self, t, x, y):
        return self.value(t, x, y)


def zero_potential() -> Potential:
    return Potential("zero", lambda t, x: np.zeros(len(t)), lambda t, x: np.zeros_like(x))


def power_potential(sigma: float, weight: Callable = None, name: str = None) -> Potential:
    """``F(t, x) = b(t) |x|**sigma`` with ``grad F(t, 0) = 0``."""
    if not sigma > 1:
        raise BadParam("sigma must exceed 1")
    b = weight if weight is not None else (lambda t: np.ones_like(t))

    def val(t, x):
        return b(t) * np.power(_norm(x), sigma)

    def grad(t, x):
        r = _norm(x)
        return (b(t) * sigma * np.power(r, sigma - 1.0))[:, None] * _unit(x, r)

    return Potential(name or f"power_potential({sigma:g})", val, grad, {"sigma": float(sigma)})


def split_lagrangian(kinetic, kinetic_deriv, potential: Potential, name: str,
                     params=None, period_T: float = 1.0, exact=None,
                     kinetic_excess=None) -> Lagrangian:
    """``L = kinetic(|y|) + F(t, x)``; ``kinetic_deriv`` is the derivative in ``|y|``.

    ``kinetic_excess(r)``, when given, must equal ``kinetic(r) - kinetic(0)``
    evaluated without cancellation; the solver compares actions through it
    so that tiny decreases near a minimizer stay visible.
    """

    def val(t, x, y):
        with np.errstate(over="ignore"):
            return kinetic(_norm(y)) + potential.value(t, x)

    def dy(t, x, y):
        r = _norm(y)
        with np.errstate(over="ignore", invalid="ignore"):
            return kinetic_deriv(r)[:, None] * _unit(y, r)

    excess = None
    base = 0.0
    if kinetic_excess is not None:
        base = float(kinetic(np.zeros(1))[0])

        def excess(t, x, y):
            with np.errstate(over="ignore"):
                return kinetic_excess(_norm(y)) + potential.value(t, x)

    return Lagrangian(name, val, lambda t, x, y: potential.grad(t, x), dy,
                      dict(params or {}), potential, kinetic, float(period_T), exact,
                      base, excess)


def quadratic_tracking(period_T: float = 1.0, dim: int = 1) -> Lagrangian:
    """``|y|**2 / 2 + |x - s(t)|**2`` with ``s(t) = sin(2 pi t / T) e_1``.

    The periodic minimizer is ``A sin(omega t) e_1``, ``A = 2 / (2 + omega**2)``.
    """
    T = float(period_T)
    omega = 2 * math.pi / T
    amp = 2.0 / (2.0 + omega ** 2)

    def target(t, d):
        s = np.zeros((len(t), d))
        s[:, 0] = np.sin(omega * t)
        return s

    def fval(t, x):
        e = x - target(t, x.shape[1])
        return np.sum(e * e, axis=1)

    def fgrad(t, x):
        return 2.0 * (x - target(t, x.shape[1]))

    pot = Potential("tracking", fval, fgrad)

    def exact(t):
        return amp * target(np.asarray(t, dtype=float), dim)

    return split_lagrangian(lambda r: 0.5 * r * r, lambda r: r, pot, "quadratic_tracking",
                            {"T": T, "amplitude": amp}, T, exact)


def exp_cosh_sublinear(sigma: float = 1.5, period_T: float = 1.0) -> Lagrangian:
    """``2 cosh(2|y|) + (1 + sin(2 pi t / T)) |x|**sigma``; its minimizer is 0."""
    T = float(period_T)
    omega = 2 * math.pi / T
    pot = power_potential(sigma, lambda t: 1.0 + np.sin(omega * t),
                          f"(1+sin)|x|^{sigma:g}")

    def kin(r):
        with np.errstate(over="ignore"):
            return 2.0 * np.cosh(2.0 * r)

    def dkin(r):
        with np.errstate(over="ignore"):
            return 4.0 * np.sinh(2.0 * r)

    def kin_excess(r):
        with np.errstate(over="ignore"):
            return 4.0 * np.sinh(r) ** 2

    return split_lagrangian(kin, dkin, pot, f"exp_cosh_sublinear({sigma:g})",
                            {"sigma": float(sigma), "T": T}, T,
                            lambda t: np.zeros((len(np.atleast_1d(t)), 1)), kin_excess)


def quartic_kinetic(period_T: float = 1.0) -> Lagrangian:
    """``|y|**4`` with no potential (a deliberately fast-growing test case)."""
    return split_lagrangian(lambda r: r ** 4, lambda r: 4 * r ** 3, zero_potential(),
                            "quartic_kinetic", {}, period_T)


REGISTRY = {
    "quadratic_tracking": quadratic_tracking,
    "exp_cosh_sublinear": exp_cosh_sublinear,
    "quartic_kinetic": quartic_kinetic,
}


def make_lagrangian(name: str, period_T: float = 1.0, **params) -> Lagrangian:
    if name not in REGISTRY:
        raise BadParam(f"unknown lagrangian {name!r}; known: {sorted(REGISTRY)}")
    try:
        return REGISTRY[name](period_T=period_T, **params)
    except TypeError as exc:
        raise BadParam(f"bad parameters for lagrangian {name!r}: {exc}") from None

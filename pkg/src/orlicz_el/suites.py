"""Seeded property sweeps for the Orlicz-space inequalities.

Each sweep draws its samples from ``numpy.random.default_rng(seed)`` and
evaluates them in row batches, so a sweep of ``10**4`` samples costs a few
vectorized norm computations rather than ``10**4`` scalar ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nfunction import NFunction, builtin, conjugate, inverse
from .orlicz import SLACK_FLOOR, amemiya_rows, luxemburg_rows, modular_rows

DEFAULT_SAMPLES = 10_000


@dataclass(frozen=True)
class SweepResult:
    """Outcome of one sweep; slacks are relative, ``(rhs - lhs) / max(|rhs|, tiny)``."""

    name: str
    samples: int
    violations: int
    worst_slack: float
    worst_index: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _summarize(name, lhs, rhs, seed, floor=SLACK_FLOOR) -> SweepResult:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    rel = (rhs - lhs) / np.maximum(np.abs(rhs), 1e-300)
    rel = np.where(rhs == lhs, 0.0, rel)
    rel = np.where(np.isnan(rel), -np.inf, rel)
    j = int(np.argmin(rel))
    return SweepResult(name, len(rel), int(np.sum(rel < floor)), float(rel[j]), j, seed)


def _families():
    return [builtin("power", p=1.5), builtin("power", p=2), builtin("power", p=3),
            builtin("exp_family", n=2)]


def _split(n, k):
    base = np.full(k, n // k)
    base[: n % k] += 1
    return base


def young_sweep(samples: int = DEFAULT_SAMPLES, seed: int = 0, phis=None) -> SweepResult:
    """``u v <= Phi(u) + Psi(v)``, log-uniform ``u, v`` over six decades."""
    rng = np.random.default_rng(seed)
    phis = phis or _families()
    lhs, rhs = [], []
    for phi, n in zip(phis, _split(samples, len(phis))):
        psi = conjugate(phi)
        u = np.exp(rng.uniform(np.log(1e-3), np.log(1e1), n))
        v = np.exp(rng.uniform(np.log(1e-3), np.log(1e1), n))
        lhs.append(u * v)
        rhs.append(phi.eval(u) + psi.eval(v))
    return _summarize("young", np.concatenate(lhs), np.concatenate(rhs), seed)


def _random_rows(rng, n, N, smooth=False):
    """Random rows with per-row scales over four decades.

    Smooth rows are a mean plus four Fourier modes whose amplitude is damped
    by a log-uniform factor in ``[1e-6, 1]``, so nearly constant rows (where
    the Sobolev bound is closest to equality) are well represented.
    """
    scale = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), n))[:, None]
    if not smooth:
        return scale * rng.normal(size=(n, N))
    t = np.arange(N) / N
    K = 4
    damp = np.exp(rng.uniform(np.log(1e-6), 0.0, n))[:, None]
    a = damp * rng.normal(size=(n, K)) / (1 + np.arange(K))
    b = damp * rng.normal(size=(n, K)) / (1 + np.arange(K))
    c = rng.normal(size=(n, 1))
    k = np.arange(1, K + 1)
    ang = 2 * np.pi * np.outer(t, k)
    return scale * (c + a @ np.cos(ang).T + b @ np.sin(ang).T)


def holder_sweep(samples: int = DEFAULT_SAMPLES, seed: int = 0, phis=None, N: int = 16,
                 T: float = 1.0) -> SweepResult:
    """``|int u v| <= ||u||_Phi ||v||_Psi`` with Orlicz norms on both sides."""
    rng = np.random.default_rng(seed)
    phis = phis or _families()
    w = T / N
    lhs, rhs = [], []
    for phi, n in zip(phis, _split(samples, len(phis))):
        psi = conjugate(phi)
        u = _random_rows(rng, n, N)
        v = _random_rows(rng, n, N)
        # every other pair uses v = phi(k|u|) sgn(u), the equality case of Young
        half = slice(0, n, 2)
        _, kst = amemiya_rows(phi, np.abs(u[half]), w)
        v[half] = phi.deriv(kst[:, None] * np.abs(u[half])) * np.sign(u[half])
        lhs.append(np.abs(w * np.sum(u * v, axis=1)))
        nu, _ = amemiya_rows(phi, np.abs(u), w)
        nv, _ = amemiya_rows(psi, np.abs(v), w)
        rhs.append(nu * nv)
    return _summarize("holder", np.concatenate(lhs), np.concatenate(rhs), seed)


def sobolev_sweeps(samples: int = DEFAULT_SAMPLES, seed: int = 0, phi: NFunction = None,
                   N: int = 16, periods=(0.5, 1.0, 2.0), constant_scale: float = 1.0):
    """Sobolev and Sobolev-Wirtinger bounds on random trigonometric trajectories.

    Returns ``(sobolev, wirtinger)`` results.  ``constant_scale`` multiplies
    both constants and exists only as a negative control.
    """
    rng = np.random.default_rng(seed)
    phi = phi or builtin("exp_family", n=2)
    out = {"sobolev": ([], []), "wirtinger": ([], [])}
    for T, n in zip(periods, _split(samples, len(periods))):
        w = T / N
        u = _random_rows(rng, n, N, smooth=True)
        du = (np.roll(u, -1, axis=1) - u) / w
        nu, _ = amemiya_rows(phi, np.abs(u), w)
        ndu, _ = amemiya_rows(phi, np.abs(du), w)
        ip = float(inverse(phi, 1.0 / T))
        tilde = u - np.mean(u, axis=1, keepdims=True)
        out["sobolev"][0].append(np.max(np.abs(u), axis=1))
        out["sobolev"][1].append(constant_scale * ip * max(1.0, T) * (nu + ndu))
        out["wirtinger"][0].append(np.max(np.abs(tilde), axis=1))
        out["wirtinger"][1].append(constant_scale * T * ip * ndu)
    return tuple(_summarize(k, np.concatenate(a), np.concatenate(b), seed) for k, (a, b) in out.items())


def amemiya_sweep(samples: int = DEFAULT_SAMPLES, seed: int = 0, phis=None, N: int = 16,
                  T: float = 1.0) -> SweepResult:
    """``||u||_Phi <= (1 + rho(k u)) / k`` for a random ``k`` per sample, and
    ``lux <= ||u||_Phi <= 2 lux`` alongside (folded into the same count)."""
    rng = np.random.default_rng(seed)
    phis = phis or _families()
    w = T / N
    lhs, rhs = [], []
    for phi, n in zip(phis, _split(samples, len(phis))):
        m = np.abs(_random_rows(rng, n, N))
        lux = luxemburg_rows(phi, m, w)
        am, _ = amemiya_rows(phi, m, w, lux)
        k = np.exp(rng.uniform(np.log(0.1), np.log(10.0), n)) / lux
        with np.errstate(over="ignore"):
            bound = (1.0 + modular_rows(phi, k[:, None] * m, w)) / k
        lhs += [am, lux, am]
        rhs += [bound, am * (1 + 1e-12), 2 * lux + 1e-9]
    return _summarize("amemiya", np.concatenate(lhs), np.concatenate(rhs), seed)


def run_all(samples: int = DEFAULT_SAMPLES, seed: int = 0, sobolev_scale: float = 1.0) -> list:
    s, wi = sobolev_sweeps(samples, seed, constant_scale=sobolev_scale)
    return [young_sweep(samples, seed), holder_sweep(samples, seed), s, wi,
            amemiya_sweep(samples, seed)]

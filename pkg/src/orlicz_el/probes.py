"""Probe-grid configurations for the finite-sample heuristics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProbeConfig:
    """Log-spaced scan over ``[lo, hi]``.

    ``extended_log_max`` lets scans that work in log-coordinates (ordering
    relations) continue far past ``hi`` when the functions involved expose a
    log-log evaluator.
    """

    lo: float = 1e-8
    hi: float = 1e8
    points: int = 257
    seed: int = 0
    extended_log_max: float = 1e7
    extended_points: int = 96

    def grid(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.points)

    def scaled(self, factor: int) -> "ProbeConfig":
        return ProbeConfig(self.lo, self.hi, self.points * factor, self.seed,
                           self.extended_log_max, self.extended_points * factor)


@dataclass(frozen=True)
class IndexProbeConfig:
    """Grids for the Matuszewska-Orlicz index estimates.

    ``alpha`` uses ``t`` in ``[10**-decades, 1]``, ``beta`` uses
    ``[1, 10**decades]``; the slope is fitted on the outermost decade only.
    """

    u_lo: float = 1e-8
    u_hi: float = 1e8
    u_points: int = 64
    decades: int = 4
    points_per_decade: int = 8

    def t_grids(self):
        n = self.decades * self.points_per_decade + 1
        small = np.logspace(-self.decades, 0, n)
        large = np.logspace(0, self.decades, n)
        return small, large

    def u_grid(self) -> np.ndarray:
        return np.geomspace(self.u_lo, self.u_hi, self.u_points)


@dataclass(frozen=True)
class HypothesisProbeConfig:
    """Product grid plus seeded random draws for pointwise hypothesis checks.

    ``|x|`` and ``|y|`` run over ``0`` and a log grid up to ``x_max`` /
    ``y_max``; directions are random unit vectors.
    """

    t_points: int = 9
    x_max: float = 1e3
    x_points: int = 13
    y_max: float = 30.0
    y_points: int = 13
    random: int = 256
    seed: int = 0
    tol: float = 1e-9

    def scaled(self, factor: int) -> "HypothesisProbeConfig":
        return HypothesisProbeConfig(self.t_points * factor, self.x_max, self.x_points * factor,
                                     self.y_max, self.y_points * factor, self.random * factor,
                                     self.seed, self.tol)

"""Transverse-field XY chain: parameters, dispersion, Bogoliubov angle and
momentum sums.

All extensive quantities in the package are per site.  A finite chain of
odd length N contributes the positive modes k = 2*pi*l/N, l = 1..(N-1)/2,
and the thermodynamic limit replaces (1/N) sum_k by (1/2pi) int_0^pi dk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import quadrature
from .errors import GaplessMode

GAPLESS_TOL = 1e-14


@dataclass(frozen=True)
class ModelParams:
    """A point (h, gamma) of the XY phase diagram."""

    h: float
    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.h) and np.isfinite(self.gamma)):
            raise ValueError(f"non-finite model parameters {self!r}")

    def shifted(self, dh: float = 0.0, dgamma: float = 0.0) -> "ModelParams":
        return ModelParams(self.h + dh, self.gamma + dgamma)


@dataclass(frozen=True)
class QuenchSpec:
    """Coupling ``delta`` to the central spin; ``c1`` shifts h, ``c2`` shifts gamma."""

    delta: float
    c1: int = 1
    c2: int = 0

    def __post_init__(self):
        if self.c1 not in (0, 1) or self.c2 not in (0, 1):
            raise ValueError("c1 and c2 must be 0 or 1")
        if not np.isfinite(self.delta):
            raise ValueError("delta must be finite")

    @classmethod
    def transverse(cls, delta: float) -> "QuenchSpec":
        return cls(delta, 1, 0)

    @classmethod
    def anisotropic(cls, delta: float) -> "QuenchSpec":
        return cls(delta, 0, 1)

    def check(self) -> None:
        if self.c1 == 0 and self.c2 == 0:
            raise ValueError("quench needs c1 = 1 or c2 = 1")

    def quenched(self, p: ModelParams) -> ModelParams:
        return ModelParams(p.h + self.c1 * self.delta, p.gamma + self.c2 * self.delta)

    def with_delta(self, delta: float) -> "QuenchSpec":
        return QuenchSpec(delta, self.c1, self.c2)


@dataclass(frozen=True)
class FiniteChain:
    """Periodic chain of odd length N >= 3."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"FiniteChain needs odd N >= 3, got {self.N}")


@dataclass(frozen=True)
class ThermoLimit:
    """Thermodynamic limit evaluated by adaptive Gauss-Kronrod quadrature."""

    atol: float = 1e-10
    rtol: float = 0.0
    max_intervals: int = 2**16

    def __post_init__(self):
        if not self.atol > 0:
            raise ValueError("ThermoLimit tolerance must be positive")


MomentumGrid = Union[FiniteChain, ThermoLimit]


def dispersion(k, p: ModelParams):
    """Single-particle energy sqrt((h + cos k)^2 + gamma^2 sin^2 k)."""
    k = np.asarray(k, dtype=float)
    return np.hypot(p.h + np.cos(k), p.gamma * np.sin(k))


def bogoliubov_angle(k, p: ModelParams):
    """Bogoliubov angle theta_k = atan2(gamma sin k, h + cos k).

    The two-argument form keeps theta_k continuous on (0, pi) and in
    (0, pi) for gamma > 0; it flips sign with gamma.
    """
    k = np.asarray(k, dtype=float)
    x = p.h + np.cos(k)
    y = p.gamma * np.sin(k)
    if np.any(np.hypot(x, y) <= GAPLESS_TOL):
        raise GaplessMode(f"gapless mode for h={p.h}, gamma={p.gamma}")
    return np.arctan2(y, x)


def angle_derivatives(k, p: ModelParams):
    """(d theta/dh, d theta/dgamma, d eps/dh, d eps/dgamma) at each k."""
    k = np.asarray(k, dtype=float)
    x = p.h + np.cos(k)
    s = np.sin(k)
    eps2 = x * x + (p.gamma * s) ** 2
    eps = np.sqrt(eps2)
    return -p.gamma * s / eps2, x * s / eps2, x / eps, p.gamma * s * s / eps


def momentum_modes(g: MomentumGrid) -> np.ndarray:
    """Positive momenta of a finite chain, or the first-pass quadrature nodes."""
    if isinstance(g, FiniteChain):
        return 2.0 * np.pi * np.arange(1, (g.N - 1) // 2 + 1) / g.N
    bp = quadrature.initial_breakpoints(0.0, np.pi)
    lo, hi = bp[:-1], bp[1:]
    return (0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * quadrature.NODES[None, :]).ravel()


def brillouin_average(f: Callable[[np.ndarray], np.ndarray], g: MomentumGrid):
    """Per-site momentum average of ``f``.

    ``f`` maps an array of momenta (first axis) to values with optional
    trailing axes.  FiniteChain gives (1/N) sum_{k>0} f(k); ThermoLimit gives
    (1/2pi) int_0^pi f(k) dk.
    """
    if isinstance(g, FiniteChain):
        vals = np.asarray(f(momentum_modes(g)), dtype=float)
        out = np.sum(vals, axis=0) / g.N
    else:
        res = quadrature.integrate(f, 0.0, np.pi, atol=2 * np.pi * g.atol, rtol=g.rtol,
                                   max_intervals=g.max_intervals)
        out = res.value / (2.0 * np.pi)
    return float(out) if np.ndim(out) == 0 else out


def sign_or_plus(x: float) -> float:
    """sign(x) with sign(0) = +1."""
    return -1.0 if x < 0 else 1.0

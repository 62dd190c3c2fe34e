"""Finite-size scaling of the derivative of the total complexity with respect
to the quenched parameter (h + delta or gamma + delta).

The initial point is held fixed and only the post-quench Hamiltonian is
varied.  dC_N/d(lambda) of the total (not per-site) complexity grows
linearly with N; near a transition line the per-site derivative behaves like
|distance| at short times and like log|distance| at long times.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FiniteChain, ModelParams, MomentumGrid, QuenchSpec, brillouin_average
from .errors import InsufficientData
from .quench import _overlap_sq, _terms_from_overlap

FD_STEP = 1e-4
MIN_N = 101


def _shift(pq: ModelParams, lambda_sel: str, s: float) -> ModelParams:
    if lambda_sel == "h":
        return pq.shifted(dh=s)
    if lambda_sel == "gamma":
        return pq.shifted(dgamma=s)
    raise ValueError(f"lambda_sel must be 'h' or 'gamma', got {lambda_sel!r}")


def dcn_dparam_per_site(p: ModelParams, q: QuenchSpec, t: float, g: MomentumGrid,
                        lambda_sel: str = "h", step: float = FD_STEP) -> float:
    """Per-site d C_N / d(lambda + delta) by a central difference taken mode by mode."""
    q.check()
    pq = q.quenched(p)
    up, dn = _shift(pq, lambda_sel, step), _shift(pq, lambda_sel, -step)

    def f(k):
        c_up = _terms_from_overlap(_overlap_sq(k, p, up, [t]))[0][:, 0]
        c_dn = _terms_from_overlap(_overlap_sq(k, p, dn, [t]))[0][:, 0]
        return (c_up - c_dn) / (2 * step)

    return brillouin_average(f, g)


def dcn_dparam(p: ModelParams, q: QuenchSpec, t: float, N: int, lambda_sel: str = "h",
               step: float = FD_STEP) -> float:
    """Derivative of the total complexity N * C_N of an N-site chain."""
    return N * dcn_dparam_per_site(p, q, t, FiniteChain(N), lambda_sel, step)


@dataclass
class ScalingRun:
    Ns: np.ndarray
    derivatives: np.ndarray
    lambda_sel: str
    p: ModelParams
    q: QuenchSpec
    t: float

    def __post_init__(self):
        self.Ns = np.asarray(self.Ns, dtype=int)
        self.derivatives = np.asarray(self.derivatives, dtype=float)
        if np.any(np.diff(self.Ns) <= 0):
            raise ValueError("Ns must be strictly increasing")
        if np.any(self.Ns < MIN_N):
            raise ValueError(f"chain lengths must be >= {MIN_N}")

    def to_csv(self, path) -> None:
        from .io import write_csv
        write_csv(Path(path), ["N", "derivative"], zip(self.Ns.tolist(), self.derivatives))


def scaling_run(p: ModelParams, q: QuenchSpec, t: float, Ns, lambda_sel: str = "h",
                workers: int = 1) -> ScalingRun:
    Ns = [int(n) for n in Ns]
    run = lambda n: dcn_dparam(p, q, t, n, lambda_sel)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(run, Ns))
    else:
        vals = [run(n) for n in Ns]
    return ScalingRun(np.array(Ns), np.array(vals), lambda_sel, p, q, t)


@dataclass
class CriticalApproach:
    """(1/N) dC_N/d(lambda) at decreasing distance to a transition line."""

    distances: np.ndarray
    scaled: np.ndarray
    lambda_sel: str
    t: float

    def to_csv(self, path) -> None:
        from .io import write_csv
        write_csv(Path(path), ["distance_to_critical", "scaled_derivative"],
                  zip(self.distances, self.scaled))


def critical_approach(distances, t: float, g: MomentumGrid, lambda_sel: str = "h",
                      gamma: float = 0.5, h: float = 0.5, delta: float = 0.1,
                      side: float = -1.0) -> CriticalApproach:
    """Move the quenched point to distance d from the transition line.

    For ``lambda_sel="h"`` the initial field is h = 1 + side*d - delta at
    fixed gamma, so the quenched field sits at 1 + side*d.  For
    ``"gamma"`` the initial anisotropy is side*d - delta at fixed h (|h| < 1).
    """
    d = np.asarray(distances, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    vals = []
    for x in d:
        if lambda_sel == "h":
            p, q = ModelParams(1 + side * x - delta, gamma), QuenchSpec.transverse(delta)
        else:
            p, q = ModelParams(h, side * x - delta), QuenchSpec.anisotropic(delta)
        vals.append(dcn_dparam_per_site(p, q, t, g, lambda_sel))
    return CriticalApproach(d, np.array(vals), lambda_sel, t)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def _linfit(x, y) -> LinearFit:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return LinearFit(float(slope), float(intercept), float(r2))


@dataclass(frozen=True)
class NScalingFit:
    linear: LinearFit  # derivative = slope * N + intercept
    exponent: float  # log-log slope of |derivative| against N


@dataclass(frozen=True)
class LawFit:
    linear: LinearFit  # y = a * d + b
    log: LinearFit  # y = a * log d + b
    preferred: str  # "linear" or "log"


def scaling_fit(run):
    """Fit a ScalingRun against N, or a CriticalApproach against both laws."""
    if isinstance(run, ScalingRun):
        if run.Ns.size < 4:
            raise InsufficientData("need at least 4 chain lengths")
        n = run.Ns.astype(float)
        y = run.derivatives
        expo = np.polyfit(np.log(n), np.log(np.abs(y)), 1)[0] if np.all(y != 0) else np.nan
        return NScalingFit(_linfit(n, y), float(expo))
    if isinstance(run, CriticalApproach):
        if run.distances.size < 4:
            raise InsufficientData("need at least 4 distances")
        lin = _linfit(run.distances, run.scaled)
        log = _linfit(np.log(run.distances), run.scaled)
        return LawFit(lin, log, "linear" if lin.r2 >= log.r2 else "log")
    raise TypeError(f"cannot fit {type(run).__name__}")

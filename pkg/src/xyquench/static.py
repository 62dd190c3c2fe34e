"""Time-independent Nielsen complexity between nearby ground states.

The complexity between two ground states is the per-site average of
((theta_target - theta_reference)/2)^2.  Closed-form small-delta series
are provided for shifts along h, along gamma and along the diagonal, plus
the triangle-inequality defect of the two-leg path.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (ModelParams, MomentumGrid, ThermoLimit, bogoliubov_angle,
                   brillouin_average, sign_or_plus)
from .errors import UnsupportedRegime, XYQuenchError

GUARD_FACTOR = 5.0


@dataclass(frozen=True)
class SeriesValue:
    value: float
    order: int
    valid: bool


def nielsen_static(ref: ModelParams, tgt: ModelParams, g: MomentumGrid = ThermoLimit()) -> float:
    """Per-site Nielsen complexity between the ground states at ``ref`` and ``tgt``."""

    def integrand(k):
        return (0.5 * (bogoliubov_angle(k, tgt) - bogoliubov_angle(k, ref))) ** 2

    return brillouin_average(integrand, g)


def _near_ising(h: float, delta: float) -> bool:
    return min(abs(1 - h), abs(1 + h)) < GUARD_FACTOR * abs(delta)


def _near_anisotropic(gamma: float, delta: float) -> bool:
    return abs(gamma) < GUARD_FACTOR * abs(delta)


def nielsen_series(p: ModelParams, delta: float, direction: str = "h") -> SeriesValue:
    """Small-delta expansion of the static complexity.

    ``direction`` selects the target: ``"h"`` -> (h + delta, gamma),
    ``"gamma"`` -> (h, gamma + delta), ``"diagonal"`` -> (h + delta,
    gamma + delta).  Only the h direction has a closed form for |h| > 1.
    Points inside the guard band around a critical line come back with
    ``valid=False``.
    """
    h, gam = p.h, p.gamma
    ag = abs(gam)
    d = delta
    if direction == "h":
        if abs(h) < 1:
            u = 1 - h * h
            value = (d**2 / (16 * ag * u) + h * d**3 / (16 * ag * u**2)
                     + d**4 * (7 * gam**2 * (3 * h * h + 1) + h * h - 1) / (384 * ag**3 * u**3))
            valid = not (_near_ising(h, d) or _near_anisotropic(gam, d))
            return SeriesValue(value, 4, valid)
        a = np.sqrt(h * h + gam * gam - 1)
        value = (gam**2 * d**2 * abs(h) / (16 * (h * h - 1) * a**3)
                 - np.sign(h) * gam**2 * d**3 * (gam**2 + 4 * h**4 + (gam**2 - 3) * h * h - 1)
                 / (32 * (h * h - 1) ** 2 * a**5))
        return SeriesValue(float(value), 3, not _near_ising(h, d))
    if abs(h) >= 1:
        raise UnsupportedRegime(f"no closed form for direction={direction!r} at |h| >= 1")
    if direction == "gamma":
        value = (d**2 / (16 * ag * (ag + 1) ** 2)
                 - np.sign(gam) * (3 * ag + 1) * d**3 / (32 * gam**2 * (ag + 1) ** 3)
                 + (ag * (43 * ag + 28) + 7) * d**4 / (384 * ag**3 * (ag + 1) ** 4))
        return SeriesValue(float(value), 4, not _near_anisotropic(gam, d))
    if direction == "diagonal":
        u = 1 - h * h
        c2 = (2 - h * h + ag * (ag + 2)) / (16 * ag * (ag + 1) ** 2 * u)
        # For a straight-line shift the delta^3 coefficient is half the
        # directional derivative of the delta^2 coefficient.
        dc2_dh = h / (8 * ag * u**2)
        dc2_dg = -(ag**3 + 3 * ag**2 - 3 * ag * h * h + 6 * ag - h * h + 2) / (16 * ag**2 * (ag + 1) ** 3 * u)
        s = np.sign(gam)
        c3 = 0.5 * (dc2_dh + s * dc2_dg)
        h2 = h * h
        num4 = ((7 * ag**6 + 28 * ag**5 + 47 * ag**4 + 48 * ag**3 + 80 * ag**2 + 48 * ag + 12)
                + h2 * (21 * ag**6 + 84 * ag**5 + 115 * ag**4 + 40 * ag**3 - 174 * ag**2 - 128 * ag - 32)
                + 3 * h2**2 * (2 * ag**4 + 8 * ag**3 + 55 * ag**2 + 36 * ag + 9)
                - h2**3 * (43 * ag**2 + 28 * ag + 7)
                - 16 * s * ag * (ag + 1) ** 4 * h * u)
        c4 = num4 / (384 * ag**3 * (ag + 1) ** 4 * u**3)
        valid = not (_near_ising(h, d) or _near_anisotropic(gam, d))
        return SeriesValue(float(c2 * d**2 + c3 * d**3 + c4 * d**4), 4, valid)
    raise ValueError(f"unknown direction {direction!r}")


def _triangle_points(p: ModelParams, delta: float, sign_corrected: bool, order: str):
    sh = sign_or_plus(p.h) if sign_corrected else 1.0
    sg = sign_or_plus(p.gamma) if sign_corrected else 1.0
    end = p.shifted(sh * delta, sg * delta)
    if order == "h_first":
        mid = p.shifted(dh=sh * delta)
    elif order == "gamma_first":
        mid = p.shifted(dgamma=sg * delta)
    else:
        raise ValueError(f"unknown order {order!r}")
    return mid, end


def triangle_defect(p: ModelParams, delta: float, g: MomentumGrid = ThermoLimit(),
                    sign_corrected: bool = True, order: str = "h_first") -> float:
    """Delta = C(O1) + C(O2) - C(O) for the two-leg path versus the direct shift.

    With ``sign_corrected`` the target is (h + sign(h) delta, gamma + sign(gamma) delta).
    The three complexities share one integrand: per mode the defect is
    -(a*b)/2 with a, b the angle increments of the two legs.
    """
    if delta < 0:
        raise ValueError("triangle_defect needs delta >= 0")
    mid, end = _triangle_points(p, delta, sign_corrected, order)

    def integrand(k):
        t0 = bogoliubov_angle(k, p)
        t1 = bogoliubov_angle(k, mid)
        t2 = bogoliubov_angle(k, end)
        return -0.5 * (t1 - t0) * (t2 - t1)

    return brillouin_average(integrand, g)


def triangle_series(p: ModelParams, delta: float) -> SeriesValue:
    """Leading terms of the triangle defect for sign-corrected targets."""
    h, gam, d = abs(p.h), abs(p.gamma), delta
    if h < 1:
        u = 1 - h * h
        value = (d**3 / (32 * gam**2 * u)
                 + d**4 * (8 * gam * h - 3 * u) / (192 * gam**3 * u**2))
        return SeriesValue(value, 4, not (_near_ising(h, d) or _near_anisotropic(gam, d)))
    a = np.sqrt(h * h + gam * gam - 1)
    return SeriesValue(float(gam * d**2 / (8 * a**3)), 2, not _near_ising(h, d))


@dataclass
class TriangleMap:
    h: np.ndarray
    gamma: np.ndarray
    values: np.ndarray  # shape (len(gamma), len(h)); NaN where a point failed
    delta: float

    def argmax(self) -> tuple[float, float]:
        j, i = np.unravel_index(np.nanargmax(self.values), self.values.shape)
        return float(self.h[i]), float(self.gamma[j])

    def to_csv(self, path) -> None:
        from .io import write_csv
        rows = [(h, gm, self.values[j, i])
                for j, gm in enumerate(self.gamma) for i, h in enumerate(self.h)]
        write_csv(Path(path), ["h", "gamma", "delta_defect"], rows)


def triangle_map(h_range=(-2.0, 2.0), gamma_range=(0.1, 1.0), delta: float = 0.1,
                 resolution=50, g: MomentumGrid = ThermoLimit(), workers: int = 1,
                 guard: float = 1e-9) -> TriangleMap:
    """Triangle defect on a regular (h, gamma) grid (the data behind the heat map).

    Grid points whose path touches a gapless point (within ``guard`` of
    |h| = 1 or gamma = 0) are recorded as NaN.
    """
    nh, ng = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nh < 2 or ng < 2:
        raise ValueError("resolution must be >= 2 per axis")
    hs = np.linspace(h_range[0], h_range[1], int(nh))
    gs = np.linspace(gamma_range[0], gamma_range[1], int(ng))

    def point(args):
        h, gm = args
        p = ModelParams(float(h), float(gm))
        mid, end = _triangle_points(p, delta, True, "h_first")
        for q in (p, mid, end):
            if abs(abs(q.h) - 1) < guard or abs(q.gamma) < guard:
                return np.nan
        try:
            return triangle_defect(p, delta, g)
        except XYQuenchError:
            return np.nan

    pts = [(h, gm) for gm in gs for h in hs]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(point, pts))
    else:
        vals = [point(x) for x in pts]
    return TriangleMap(hs, gs, np.array(vals, dtype=float).reshape(ng, nh), delta)

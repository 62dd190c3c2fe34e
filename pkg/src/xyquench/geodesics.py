"""Geodesics of the (t, h) information metric and the Fubini-Study complexity.

A geodesic is shot from (t0, h0) with a prescribed dh/dtau; dt/dtau
follows from g_ij x'^i x'^j = 1.  The affine parameter tau along the
curve, read as a function of h, is the Fubini-Study complexity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import RK45
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .core import ModelParams, MomentumGrid, QuenchSpec, ThermoLimit
from .errors import NonMonotone, NoRealVelocity, SingularMetric, XYQuenchError
from .geometry import Metric2D, qim_closed, qim_sum

FD_STEP = 1e-5
BOUNDARY_EPS = 1e-4
DET_RTOL = 1e-12
EDGE_TOL = 1e-12
MASK_STALL = 1e-6


@dataclass
class MetricField:
    """Metric evaluator with a stopping box ``domain`` = (t_lo, t_hi, x_lo, x_hi).

    ``hard`` is the (larger) box on which the evaluator is still finite,
    typically reaching the critical line itself; derivative stencils and
    integrator stages stay inside it.  ``mask`` selects usable points:
    ``"positive"`` requires a positive-definite metric, ``"nondegenerate"``
    only a non-vanishing determinant (for truncated closed forms that are
    indefinite), and ``"none"`` accepts everything.
    """

    evaluator: Callable[[float, float], Metric2D]
    domain: tuple[float, float, float, float]
    mask: str = "positive"
    hard: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.mask not in ("positive", "nondegenerate", "none"):
            raise ValueError(f"unknown mask {self.mask!r}")
        if self.hard is None:
            self.hard = self.domain

    def matrix(self, t: float, x: float) -> np.ndarray:
        return self.evaluator(t, x).matrix()

    def inside(self, t: float, x: float) -> bool:
        t_lo, t_hi, x_lo, x_hi = self.domain
        return t_lo < t < t_hi and x_lo < x < x_hi

    def margin(self, t: float, x: float) -> tuple[float, float]:
        """Distance to the hard box along t and along x."""
        t_lo, t_hi, x_lo, x_hi = self.hard
        return min(t - t_lo, t_hi - t), min(x - x_lo, x_hi - x)

    def mask_value(self, t: float, x: float) -> float:
        """Positive where the point is usable; changes sign on entering the mask."""
        m = self.matrix(t, x)
        scale = max(np.abs(m).max(), 1e-300)
        if self.mask == "positive":
            return float(np.linalg.eigvalsh(m / scale)[0])
        if self.mask == "nondegenerate":
            return float(abs(np.linalg.det(m / scale)) - DET_RTOL)
        return 1.0


def _diff(f, s):
    """Five-point central difference."""
    return (8 * (f(s) - f(-s)) - (f(2 * s) - f(-2 * s))) / (12 * s)


def metric_derivatives(field: MetricField, t: float, x: float, step: float = FD_STEP):
    """(dg/dt, dg/dx) by five-point central differences.

    The step is ``step`` away from the edges and shrinks to 1e-3 of the
    distance to the hard box near it, where the metric may blow up.
    """
    mt, mx = field.margin(t, x)
    if not (mt > 0 and mx > 0):
        raise SingularMetric(f"point ({t}, {x}) is outside the metric domain")
    st, sx = min(step, 1e-3 * mt), min(step, 1e-3 * mx)
    dt = _diff(lambda e: field.matrix(t + e, x), st)
    dx = _diff(lambda e: field.matrix(t, x + e), sx)
    return dt, dx


def christoffel(field: MetricField, t: float, x: float, step: float = FD_STEP) -> np.ndarray:
    """Gamma[i, j, k] = Gamma^i_{jk} with index 0 = t and 1 = x."""
    g = field.matrix(t, x)
    det = np.linalg.det(g)
    if abs(det) <= DET_RTOL * np.abs(g).max() ** 2:
        raise SingularMetric(f"metric determinant {det:.3e} at ({t}, {x})")
    ginv = np.linalg.inv(g)
    dg = np.stack(metric_derivatives(field, t, x, step))  # dg[l, i, j] = d_l g_ij
    # lowered[l, j, k] = (d_j g_lk + d_k g_lj - d_l g_jk) / 2
    lowered = 0.5 * (np.einsum("jlk->ljk", dg) + np.einsum("klj->ljk", dg) - dg)
    gam = np.einsum("il,ljk->ijk", ginv, lowered)
    return 0.5 * (gam + gam.transpose(0, 2, 1))


def normalization_roots(m: Metric2D, dx_dtau: float) -> tuple[float, float]:
    """Both solutions dt/dtau of g_ij x'^i x'^j = 1 for given dx/dtau (ascending)."""
    a = m.g_tt
    b = 2 * m.g_th * dx_dtau
    c = m.g_hh * dx_dtau**2 - 1
    if a == 0:
        if b == 0:
            raise NoRealVelocity("g_tt and g_th vanish")
        return (-c / b, -c / b)
    disc = b * b - 4 * a * c
    if disc < 0:
        raise NoRealVelocity(f"normalisation has no real dt/dtau (discriminant {disc:.3e})")
    r = np.sqrt(disc)
    roots = sorted(((-b - r) / (2 * a), (-b + r) / (2 * a)))
    return float(roots[0]), float(roots[1])


@dataclass
class GeodesicSolution:
    tau: np.ndarray
    t: np.ndarray
    x: np.ndarray
    dt: np.ndarray
    dx: np.ndarray
    residual: np.ndarray
    reason: str
    roots: tuple[float, float]
    root_used: float
    coord: str = "h"
    extra: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        from .io import write_csv
        write_csv(Path(path), ["tau", "t", self.coord], zip(self.tau, self.t, self.x))


def _pick_root(roots, root: str) -> float:
    lo, hi = roots
    if root == "positive":
        if hi <= 0:
            raise NoRealVelocity("no forward-time root of the normalisation condition")
        return hi
    if root == "negative":
        if lo >= 0:
            raise NoRealVelocity("no backward-time root of the normalisation condition")
        return lo
    if root == "larger":
        return hi
    if root == "smaller":
        return lo
    raise ValueError(f"unknown root choice {root!r}")


def geodesic_shoot(field: MetricField, t0: float, x0: float, dx_dtau: float = -0.1,
                   root: str = "positive", tau_max: float = 1e6, max_steps: int = 200_000,
                   rtol: float = 1e-9, atol: float = 1e-12, max_step: float = np.inf,
                   step: float = FD_STEP, residual_tol: float = 1e-6) -> GeodesicSolution:
    """Integrate the geodesic equations from (t0, x0) until the domain edge,
    the mask, ``tau_max`` or ``max_steps``.

    ``root`` picks dt/dtau among the two normalisation roots: "positive"
    (forward time), "negative", "larger" or "smaller".  "spatial" instead
    starts along x with dt/dtau = 0 and |dx/dtau| = 1/sqrt(g_hh), keeping
    only the sign of ``dx_dtau``.

    Samples are the accepted RK45 steps; the terminal sample sits on the
    event located by root finding on the dense output.
    """
    if not field.inside(t0, x0):
        raise ValueError("initial point outside the metric domain")
    if field.mask_value(t0, x0) <= 0:
        raise SingularMetric("initial point is masked")
    m0 = field.evaluator(t0, x0)
    if root == "spatial":
        # unit vector along x with dt/dtau = 0; only the sign of dx_dtau is used
        if not m0.g_hh > 0:
            raise NoRealVelocity("g_hh <= 0: no unit vector along x")
        dx_dtau = float(np.sign(dx_dtau) or 1.0) / np.sqrt(m0.g_hh)
        roots = normalization_roots(m0, dx_dtau) if m0.g_th else (0.0, 0.0)
        dt0 = 0.0
    else:
        roots = normalization_roots(m0, dx_dtau)
        dt0 = _pick_root(roots, root)

    def rhs(_tau, y):
        gam = christoffel(field, y[0], y[1], step)
        v = y[2:]
        return np.concatenate([v, -np.einsum("ijk,j,k->i", gam, v, v)])

    def events(y):
        t, x = y[0], y[1]
        t_lo, t_hi, x_lo, x_hi = field.domain
        return np.array([t - t_lo, t_hi - t, x - x_lo, x_hi - x])

    solver = RK45(rhs, 0.0, np.array([t0, x0, dt0, dx_dtau]), tau_max, rtol=rtol, atol=atol,
                  max_step=max_step)
    taus, ys = [0.0], [solver.y.copy()]
    reason = "max_steps"
    for _ in range(max_steps):
        mt, mx = field.margin(solver.y[0], solver.y[1])
        v = np.abs(solver.y[2:]) + 1e-300
        solver.max_step = min(max_step, 0.5 * mt / v[0], 0.5 * mx / v[1])
        try:
            msg = solver.step()
        except SingularMetric:
            reason = "mask"
            break
        if msg is not None or solver.status == "failed":
            # a positive metric can only lose positivity through det = 0, where
            # the connection diverges and the step size collapses before the
            # mask event is reached
            if field.mask_value(solver.y[0], solver.y[1]) < MASK_STALL:
                reason = "mask"
                break
            raise XYQuenchError(f"geodesic integration failed: {msg}")
        y = solver.y
        ev = events(y)
        hit_edge = np.any(ev <= 0)
        hit_mask = not hit_edge and field.mask_value(y[0], y[1]) <= 0
        if not (hit_edge or hit_mask) and np.any(ev <= EDGE_TOL):
            # stages may not leave the hard box, so an edge shared by both
            # boxes is only approached geometrically
            taus.append(solver.t)
            ys.append(y.copy())
            reason = "boundary"
            break
        if hit_edge or hit_mask:
            dense = solver.dense_output()
            if hit_edge:
                i = int(np.argmin(ev))
                fn = lambda s: events(dense(s))[i]
                reason = "boundary"
            else:
                fn = lambda s: field.mask_value(*dense(s)[:2])
                reason = "mask"
            # step back a hair so the terminal sample is still usable
            s = brentq(fn, solver.t_old, solver.t, xtol=1e-14, rtol=1e-14)
            while fn(s) <= 0 and s > solver.t_old:
                s = np.nextafter(s, -np.inf)
            taus.append(s)
            ys.append(dense(s))
            break
        taus.append(solver.t)
        ys.append(y.copy())
        if solver.status == "finished":
            reason = "max_steps"
            break
    ys = np.array(ys)
    taus = np.array(taus)
    res = np.array([abs(field.matrix(t, x) @ v @ v - 1)
                    for t, x, v in zip(ys[:, 0], ys[:, 1], ys[:, 2:])])
    bad = np.nonzero(res >= residual_tol)[0]
    if bad.size:
        # keep only the prefix on which the normalisation holds
        n = max(int(bad[0]), 1)
        taus, ys, res = taus[:n], ys[:n], res[:n]
        reason = "max_steps"
    coord = field.evaluator(t0, x0).coord
    return GeodesicSolution(taus, ys[:, 0], ys[:, 1], ys[:, 2], ys[:, 3], res, reason,
                            roots, dt0, coord)


@dataclass
class TauOfH:
    """Inverse map x -> tau on one monotone branch of a geodesic.

    ``start`` and ``stop`` index the samples of the branch in the solution;
    ``monotone`` is True when the branch is the whole geodesic.
    """

    x: np.ndarray
    tau: np.ndarray
    spline: CubicHermiteSpline
    monotone: bool
    start: int
    stop: int

    @property
    def prefix(self) -> int:
        return self.stop - self.start

    def __call__(self, x):
        return self.spline(x)

    def slope(self, x):
        """Local d tau / d x."""
        return self.spline.derivative()(x)


def _monotone_runs(x: np.ndarray, dx: np.ndarray):
    """Half-open index ranges on which x(tau) is strictly monotone."""
    step = np.sign(np.diff(x))
    runs, i = [], 0
    for j in range(1, len(step) + 1):
        if j == len(step) or step[j] != step[i] or step[j] == 0:
            lo, hi = i, j + 1
            # drop end points where the velocity already has the wrong sign
            while hi - lo > 1 and np.sign(dx[lo]) != step[i]:
                lo += 1
            while hi - lo > 1 and np.sign(dx[hi - 1]) != step[i]:
                hi -= 1
            runs.append((lo, hi))
            i = j
    return runs


def tau_of_h(sol: GeodesicSolution, strict: bool = False, branch: str = "longest") -> TauOfH:
    """Invert x(tau) by cubic Hermite interpolation using the exact slopes 1/x'.

    If x(tau) turns around, the map is built on one monotone branch:
    ``branch="first"`` keeps the maximal monotone prefix, ``"longest"`` the
    branch covering the widest x range.  ``strict=True`` raises NonMonotone
    instead.
    """
    runs = _monotone_runs(sol.x, sol.dx) if len(sol.x) > 1 else [(0, 1)]
    monotone = len(runs) == 1 and runs[0] == (0, len(sol.x))
    if not monotone and strict:
        n = runs[0][1] if runs[0][0] == 0 else 0
        raise NonMonotone(f"x(tau) is monotone only for the first {n} samples", n)
    if branch == "first":
        lo, hi = runs[0]
        if lo != 0:
            hi = 0
    elif branch == "longest":
        lo, hi = max(runs, key=lambda r: abs(sol.x[r[1] - 1] - sol.x[r[0]]))
    else:
        raise ValueError(f"unknown branch {branch!r}")
    if hi - lo < 2:
        raise NonMonotone("branch has fewer than two monotone samples", hi - lo)
    x, tau, slope = sol.x[lo:hi], sol.tau[lo:hi], 1.0 / sol.dx[lo:hi]
    if x[-1] < x[0]:
        x, tau, slope = x[::-1], tau[::-1], slope[::-1]
    return TauOfH(x, tau, CubicHermiteSpline(x, tau, slope), monotone, lo, hi)


def smalltime_field(gamma: float, q: QuenchSpec, t_range=(1e-6, 1.0), x_range=(-1.0, 1.0),
                    mask: str = "nondegenerate", boundary_eps: float = BOUNDARY_EPS) -> MetricField:
    """Closed-form small-time metric; truncated, so only non-degeneracy is required."""
    hard_t = (0.0, np.inf)
    def ev(t, x):
        return qim_closed(ModelParams(x, gamma), q, t, "smalltime", "h" if q.c1 else "gamma")

    return MetricField(ev, (t_range[0], t_range[1], x_range[0] + boundary_eps,
                            x_range[1] - boundary_eps), mask,
                       hard=(hard_t[0], hard_t[1], x_range[0], x_range[1]))


def larget_field(gamma: float, q: QuenchSpec, t_range=(0.0, np.inf), x_range=(-1.0, 1.0),
                 mask: str = "positive", boundary_eps: float = BOUNDARY_EPS) -> MetricField:
    """Closed-form large-time metric (transverse quench, |h| < 1)."""
    hard_t = (0.0, np.inf)
    def ev(t, x):
        return qim_closed(ModelParams(x, gamma), q, t, "larget", "h")

    return MetricField(ev, (t_range[0], t_range[1], x_range[0] + boundary_eps,
                            x_range[1] - boundary_eps), mask,
                       hard=(hard_t[0], hard_t[1], x_range[0], x_range[1]))


def numeric_field(gamma: float, q: QuenchSpec, t_range=(1e-6, 1.0), x_range=(-1.0, 1.0),
                  subtract_ground: bool = False, g: MomentumGrid = ThermoLimit(atol=1e-15),
                  mask: str = "positive", boundary_eps: float = BOUNDARY_EPS) -> MetricField:
    """Metric from the full momentum integral of the geometric tensor."""
    hard_t = (0.0, np.inf)
    coord = "h" if q.c1 else "gamma"

    def ev(t, x):
        p = ModelParams(x, gamma) if coord == "h" else ModelParams(gamma, x)
        return qim_sum(p, q, t, coord, g, subtract_ground=subtract_ground)

    return MetricField(ev, (t_range[0], t_range[1], x_range[0] + boundary_eps,
                            x_range[1] - boundary_eps), mask,
                       hard=(hard_t[0], hard_t[1], x_range[0], x_range[1]))


def flat_field(g_tt: float = 1.0, g_th: float = 0.0, g_hh: float = 1.0,
               domain=(-np.inf, np.inf, -np.inf, np.inf)) -> MetricField:
    m = Metric2D("h", g_tt, g_th, g_hh)
    return MetricField(lambda t, x: m, domain, "positive")


def ricci_scalar(field: MetricField, t: float, x: float, step: float = 1e-4) -> float:
    """Scalar curvature by finite differences of the connection (diagnostic only)."""
    def gam(tt, xx):
        return christoffel(field, tt, xx)

    g0 = gam(t, x)
    dgam = np.stack([(gam(t + step, x) - gam(t - step, x)) / (2 * step),
                     (gam(t, x + step) - gam(t, x - step)) / (2 * step)])  # dgam[l, i, j, k]
    # R_jk = d_i G^i_jk - d_k G^i_ji + G^i_ip G^p_jk - G^i_kp G^p_ji
    ric = (np.einsum("iijk->jk", dgam) - np.einsum("kiji->jk", dgam)
           + np.einsum("iip,pjk->jk", g0, g0) - np.einsum("ikp,pji->jk", g0, g0))
    ginv = np.linalg.inv(field.matrix(t, x))
    return float(np.einsum("jk,jk->", ginv, ric))

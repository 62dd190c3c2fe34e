"""Quantum geometric tensor of the excited-branch state on the (t, h) or
(t, gamma) plane.

Mode k of the branch evolved by the quenched Hamiltonian is written in the
fixed basis {|0_k 0_-k>, |1_k 1_-k>}:

    psi_k = e^{i eps~ t} [cos Omega |G~> - i sin Omega e^{-2 i eps~ t} |E~>],
    |G~> = (cos(theta~/2), -i sin(theta~/2)),
    |E~> = (-i sin(theta~/2), cos(theta~/2)),

with |G~> the quenched vacuum (energy -eps~) and |E~> its pair excitation
(energy +eps~).  This phase choice makes psi_k(0) equal the initial ground
state exactly.  The geometric tensor is additive over modes; everything
here is reported per site.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (ModelParams, MomentumGrid, QuenchSpec, ThermoLimit, angle_derivatives,
                   bogoliubov_angle, brillouin_average, dispersion)
from .errors import DerivativeStencilFailure, UnsupportedRegime

FD_STEP = 1e-5
PSD_TOL = -1e-10


@dataclass
class ModeState:
    a00: np.ndarray
    a11: np.ndarray

    def vector(self) -> np.ndarray:
        return np.stack([self.a00, self.a11], axis=-1)

    def norm2(self):
        return np.abs(self.a00) ** 2 + np.abs(self.a11) ** 2


@dataclass(frozen=True)
class Metric2D:
    """Real symmetric 2x2 metric on (t, x); ``coord`` names x ("h" or "gamma").

    The off-diagonal and x-x entries keep the names g_th and g_hh for
    either choice of x.
    """

    coord: str
    g_tt: float
    g_th: float
    g_hh: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.g_tt, self.g_th], [self.g_th, self.g_hh]])

    def det(self) -> float:
        return self.g_tt * self.g_hh - self.g_th**2

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return bool(np.linalg.eigvalsh(self.matrix()).min() >= tol)

    def __sub__(self, other: "Metric2D") -> "Metric2D":
        return Metric2D(self.coord, self.g_tt - other.g_tt, self.g_th - other.g_th,
                        self.g_hh - other.g_hh)


@dataclass
class MetricDecomposition:
    metric: Metric2D
    g_ground: Metric2D
    g_excited: Metric2D
    berry_diff: np.ndarray  # complex (A_t, A_x), per site
    weight_g: float
    weight_e: float


def _check_coord(coord: str) -> str:
    if coord not in ("h", "gamma"):
        raise ValueError(f"coord must be 'h' or 'gamma', got {coord!r}")
    return coord


def _basis(theta):
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    ground = np.stack([c + 0j, -1j * s], axis=-1)
    excited = np.stack([-1j * s, c + 0j], axis=-1)
    return ground, excited


def _state_vec(k, p: ModelParams, pq: ModelParams, t: float):
    th = bogoliubov_angle(k, p)
    thq = bogoliubov_angle(k, pq)
    om = 0.5 * (th - thq)
    phi = dispersion(k, pq) * t
    ground, excited = _basis(thq)
    a = (np.cos(om) * np.exp(1j * phi))[:, None]
    b = (-1j * np.sin(om) * np.exp(-1j * phi))[:, None]
    return a * ground + b * excited


def mode_state(k, p: ModelParams, q: QuenchSpec, t: float) -> ModeState:
    """Excited-branch mode state at time t, in the fixed fermionic basis."""
    q.check()
    v = _state_vec(np.atleast_1d(np.asarray(k, dtype=float)), p, q.quenched(p), t)
    return ModeState(v[:, 0], v[:, 1])


def ground_branch_state(k, p: ModelParams, t: float) -> np.ndarray:
    """Mode state of the branch evolved by the unquenched Hamiltonian."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    ground, _ = _basis(bogoliubov_angle(k, p))
    return np.exp(1j * dispersion(k, p) * t)[:, None] * ground


def _analytic_derivs(k, p: ModelParams, pq: ModelParams, t: float, coord: str):
    """psi, d psi/dt, d psi/dx where x shifts initial and quenched points together."""
    th = bogoliubov_angle(k, p)
    thq = bogoliubov_angle(k, pq)
    om = 0.5 * (th - thq)
    eq = dispersion(k, pq)
    dth_h, dth_g, _, _ = angle_derivatives(k, p)
    dthq_h, dthq_g, deq_h, deq_g = angle_derivatives(k, pq)
    if coord == "h":
        dth, dthq, deq = dth_h, dthq_h, deq_h
    else:
        dth, dthq, deq = dth_g, dthq_g, deq_g
    dom = 0.5 * (dth - dthq)
    phi = eq * t
    ground, excited = _basis(thq)
    c2, s2 = np.cos(0.5 * thq), np.sin(0.5 * thq)
    dground = (0.5 * dthq)[:, None] * np.stack([-s2 + 0j, -1j * c2], axis=-1)
    dexcited = (0.5 * dthq)[:, None] * np.stack([-1j * c2, -s2 + 0j], axis=-1)
    ep, em = np.exp(1j * phi), np.exp(-1j * phi)
    a = np.cos(om) * ep
    b = -1j * np.sin(om) * em
    psi = a[:, None] * ground + b[:, None] * excited
    dpsi_t = (1j * eq * a)[:, None] * ground + (-1j * eq * b)[:, None] * excited
    dphi = deq * t
    da = (-np.sin(om) * dom + 1j * np.cos(om) * dphi) * ep
    db = -1j * (np.cos(om) * dom - 1j * np.sin(om) * dphi) * em
    dpsi_x = (da[:, None] * ground + a[:, None] * dground
              + db[:, None] * excited + b[:, None] * dexcited)
    return psi, dpsi_t, dpsi_x


def _fd_derivs(k, p: ModelParams, pq: ModelParams, t: float, coord: str,
               step: float = FD_STEP, rtol: float = 1e-5):
    """Same as the analytic route but d/dx by two-level Richardson central differences."""
    dh, dg = (1.0, 0.0) if coord == "h" else (0.0, 1.0)

    def state(x):
        return _state_vec(k, p.shifted(x * dh, x * dg), pq.shifted(x * dh, x * dg), t)

    def central(s):
        return (state(s) - state(-s)) / (2 * s)

    d1, d2 = central(step), central(0.5 * step)
    rich = (4 * d2 - d1) / 3
    scale = np.maximum(1.0, np.abs(rich))
    if np.max(np.abs(d2 - rich) / scale) > rtol:
        raise DerivativeStencilFailure("Richardson levels disagree")
    psi, dpsi_t, _ = _analytic_derivs(k, p, pq, t, coord)
    return psi, dpsi_t, rich


def _qgt_from(psi, d):
    """chi_ij = <d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi> for stacked d = (d_t, d_x)."""
    gram = np.einsum("ikn,jkn->kij", d.conj(), d)
    conn = np.einsum("ikn,kn->ki", d.conj(), psi)
    return gram - conn[:, :, None] * conn.conj()[:, None, :]


def qgt_mode(k, p: ModelParams, q: QuenchSpec, t: float, coord: str = "h",
             method: str = "analytic") -> np.ndarray:
    """Per-mode complex geometric tensor, shape (len(k), 2, 2), index order (t, x)."""
    q.check()
    _check_coord(coord)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    derivs = _fd_derivs if method == "fd" else _analytic_derivs
    psi, dt_, dx_ = derivs(k, p, q.quenched(p), t, coord)
    return _qgt_from(psi, np.stack([dt_, dx_]))


def _metric_integrand(p, q, coord, times, method, subtract_ground=False):
    times = np.atleast_1d(times)
    pq = q.quenched(p)

    def f(k):
        if subtract_ground and method == "analytic":
            cols = [np.stack(_coupling_density(k, p, pq, t, coord), axis=1) for t in times]
            return np.mean(cols, axis=0)
        cols = [qgt_mode(k, p, q, t, coord, method).real for t in times]
        m = np.mean(cols, axis=0)
        out = np.stack([m[:, 0, 0], m[:, 0, 1], m[:, 1, 1]], axis=1)
        if subtract_ground:
            out[:, 2] -= _ground_density(k, p, coord)
        return out

    return f


def _coupling_parts(k, p: ModelParams, pq: ModelParams, coord: str):
    """(A, dA, dtheta~, eps~, deps~) per mode, with A = theta - theta~.

    dA is formed from eps~^2 - eps^2 directly, so it stays accurate where
    both angle derivatives are large and nearly equal.
    """
    s = np.sin(k)
    x = p.h + np.cos(k)
    xq = pq.h + np.cos(k)
    e2 = x * x + (p.gamma * s) ** 2
    eq2 = xq * xq + (pq.gamma * s) ** 2
    if np.any(eq2 <= 0) or np.any(e2 <= 0):
        raise GaplessMode("gapless mode in coupling metric")
    d2 = (xq - x) * (xq + x) + (pq.gamma - p.gamma) * (pq.gamma + p.gamma) * s * s
    dthq_h, dthq_g, deq_h, deq_g = angle_derivatives(k, pq)
    if coord == "h":
        da = -s * (p.gamma * d2 - (pq.gamma - p.gamma) * e2) / (e2 * eq2)
        dthq, deq = dthq_h, deq_h
    else:
        da = s * (x * d2 - (xq - x) * e2) / (e2 * eq2)
        dthq, deq = dthq_g, deq_g
    a = bogoliubov_angle(k, p) - bogoliubov_angle(k, pq)
    return a, da, dthq, np.sqrt(eq2), deq


def _coupling_density(k, p: ModelParams, pq: ModelParams, t: float, coord: str):
    """Per-mode (g_tt, g_tx, g_xx) minus the ground-state metric, without cancellation.

    On the Bloch sphere the mode state sits at polar angle A = theta - theta~
    about the quenched axis and azimuth phi = -2 eps~ t.  Then
    4 (g - g_ground) = -2 (1 - cos phi) dA dtheta~ - sin^2 A sin^2 phi dtheta~^2
                       + sin^2 A dphi^2 - sin 2A sin phi dtheta~ dphi.
    """
    a, da, dthq, eq, deq = _coupling_parts(k, p, pq, coord)
    phi = -2 * eq * t
    phi_t, phi_x = -2 * eq, -2 * deq * t
    sa2 = np.sin(a) ** 2
    one_m_cos = 2 * np.sin(0.5 * phi) ** 2
    sin_phi = np.sin(phi)
    tt = sa2 * phi_t**2
    tx = sa2 * phi_t * phi_x - 0.5 * np.sin(2 * a) * sin_phi * dthq * phi_t
    xx = (-2 * one_m_cos * da * dthq - sa2 * sin_phi**2 * dthq**2 + sa2 * phi_x**2
          - np.sin(2 * a) * sin_phi * dthq * phi_x)
    return 0.25 * tt, 0.25 * tx, 0.25 * xx


def qim_dephased(p: ModelParams, q: QuenchSpec, t: float, coord: str = "h",
                 g: MomentumGrid = ThermoLimit()) -> Metric2D:
    """Coupling-induced metric with every term oscillating in eps~ t dropped.

    This is the infinite-window time average taken at fixed explicit t
    (cos phi, sin phi -> 0 and sin^2 phi -> 1/2), so the secular t and t^2
    pieces are kept without the bias a finite averaging window adds.
    """
    q.check()
    _check_coord(coord)
    pq = q.quenched(p)

    def f(k):
        a, da, dthq, eq, deq = _coupling_parts(k, p, pq, coord)
        sa2 = np.sin(a) ** 2
        return np.stack([sa2 * eq * eq, sa2 * eq * deq * t,
                         -0.5 * da * dthq - 0.125 * sa2 * dthq**2 + sa2 * deq**2 * t * t], axis=1)

    return Metric2D(coord, *map(float, brillouin_average(f, g)))


def _ground_density(k, p: ModelParams, coord: str):
    dth_h, dth_g, _, _ = angle_derivatives(k, p)
    d = dth_h if coord == "h" else dth_g
    return 0.25 * d * d


def qim_sum(p: ModelParams, q: QuenchSpec, t: float, coord: str = "h",
            g: MomentumGrid = ThermoLimit(), subtract_ground: bool = False,
            time_window: float | None = None, n_window: int = 64,
            method: str = "analytic") -> Metric2D:
    """Per-site information metric Re(chi) of the excited branch.

    ``subtract_ground`` removes the delta = 0 metric (the ground-state
    fidelity metric) and leaves the coupling-induced part.  ``time_window``
    averages the metric over [t - w/2, t + w/2]; this is how the large-time
    metric is formed numerically, by letting the oscillatory cross terms
    dephase.
    """
    q.check()
    _check_coord(coord)
    times = (np.linspace(t - 0.5 * time_window, t + 0.5 * time_window, n_window)
             if time_window else np.array([t]))
    # the subtraction happens per mode, in closed form on the analytic route
    f = _metric_integrand(p, q, coord, times, method, subtract_ground)
    return Metric2D(coord, *map(float, brillouin_average(f, g)))


def ground_metric(p: ModelParams, coord: str = "h", g: MomentumGrid = ThermoLimit()) -> Metric2D:
    """Fidelity metric of the unquenched ground state (only the x-x entry is non-zero)."""
    _check_coord(coord)

    return Metric2D(coord, 0.0, 0.0, brillouin_average(lambda k: _ground_density(k, p, coord), g))


def default_large_time_window(p: ModelParams, q: QuenchSpec, periods: float = 50.0) -> float:
    ks = np.linspace(0.0, np.pi, 2049)
    return periods * 2 * np.pi / float(np.max(dispersion(ks, q.quenched(p))))


def qim_closed(p: ModelParams, q: QuenchSpec, t: float, regime: str = "smalltime",
               coord: str | None = None) -> Metric2D:
    """Closed-form coupling-induced metric at small or large times.

    Small times: transverse quench on both sides of the Ising line, and the
    anisotropic quench for |h| < 1.  Large times: transverse quench for
    |h| < 1 only.
    """
    q.check()
    h, gam, d = p.h, p.gamma, q.delta
    ag = abs(gam)
    transverse = (q.c1, q.c2) == (1, 0)
    anisotropic = (q.c1, q.c2) == (0, 1)
    if coord is None:
        coord = "h" if transverse else "gamma"
    if (transverse and coord != "h") or (anisotropic and coord != "gamma"):
        raise UnsupportedRegime("closed forms pair a transverse quench with h, anisotropic with gamma")
    if not (transverse or anisotropic):
        raise UnsupportedRegime("closed forms need a pure transverse or anisotropic quench")
    if regime == "smalltime":
        if transverse:
            if abs(h) < 1:
                gtt = ag * d**2 / (2 * (1 + ag))
                gxx = -h * gam**2 * d * t**4 / (3 * (1 + ag) ** 2)
            else:
                a = np.sqrt(h * h + gam * gam - 1)
                ah = abs(h)
                gtt = gam**2 * d**2 * (ah - a) / (2 * a * (1 - gam**2))
                gxx = (np.sign(h) * gam**2 * d * t**4 * (gam**2 - ah * (gam**2 + 1) * (a - ah) - 1)
                       / (3 * a * (1 - gam**2) ** 2))
            extra = -gam**2 * d * t**3 / 6
        else:
            if abs(h) >= 1:
                raise UnsupportedRegime("anisotropic closed form only for |h| < 1")
            b = ag * (ag + 5) - 8 * h**4 + 4 * (ag + 1) * (ag + 4) * h * h + 7
            gtt = d**2 * (ag + 2 * ag * h * h + 1) / (4 * (ag + 1) ** 3)
            gxx = -np.sign(gam) * t**4 * ag * d * (3 + ag * b) / (24 * (ag + 1) ** 5)
            extra = -d * (4 * h * h + 1) * t**3 / 24
        gtx = (t / d) * gtt + (d / t) * gxx + extra if t != 0 else 0.0
        return Metric2D(coord, float(gtt), float(gtx), float(gxx))
    if regime == "larget":
        if not transverse or abs(h) >= 1:
            raise UnsupportedRegime("large-time closed form only for a transverse quench with |h| < 1")
        u = 1 - h * h
        gtt = ag * d**2 / (2 * (1 + ag))
        gxx = (h * d / (8 * ag * u**2)
               + d**2 * (gam**2 * (16 * u**2 * t**2 + 69 * h * h + 23) + 3 * u) / (256 * ag**3 * u**3))
        return Metric2D(coord, float(gtt), 0.0, float(gxx))
    raise ValueError(f"unknown regime {regime!r}")


def line_element(m: Metric2D, dt: float, dx: float) -> float:
    return m.g_tt * dt * dt + 2 * m.g_th * dt * dx + m.g_hh * dx * dx


def full_state_metric(weight_g: complex, weight_e: complex, p: ModelParams, q: QuenchSpec,
                      t: float, coord: str = "h", g: MomentumGrid = ThermoLimit(),
                      n_sites: float | None = None) -> MetricDecomposition:
    """Metric of k_g|g>|Psi_g> + k_e|e>|Psi_e> composed from the two branches.

    g = |k_g|^2 g^g + |k_e|^2 g^e + |k_g k_e|^2 Re(A_i A_j^*), with
    A_i = <d_i Psi_g|Psi_g> - <d_i Psi_e|Psi_e>.  The connection difference is
    extensive, so the last term grows with chain length: it is scaled by
    ``n_sites`` (N for a finite chain, 1 by default in the thermodynamic
    limit, which applies the formula to per-site connections).
    """
    q.check()
    _check_coord(coord)
    wg, we = abs(weight_g) ** 2, abs(weight_e) ** 2
    if abs(wg + we - 1) > 1e-12:
        raise ValueError("|k_g|^2 + |k_e|^2 must equal 1")
    pq = q.quenched(p)
    no_quench = QuenchSpec(0.0, q.c1, q.c2)

    def f(k):
        chi_e = qgt_mode(k, p, q, t, coord).real
        chi_g = qgt_mode(k, p, no_quench, t, coord).real
        psi_e, dte, dxe = _analytic_derivs(k, p, pq, t, coord)
        psi_g, dtg, dxg = _analytic_derivs(k, p, p, t, coord)
        a_e = np.einsum("ikn,kn->ki", np.stack([dte, dxe]).conj(), psi_e)
        a_g = np.einsum("ikn,kn->ki", np.stack([dtg, dxg]).conj(), psi_g)
        diff = a_g - a_e
        return np.concatenate([
            chi_g[:, [0, 0, 1], [0, 1, 1]], chi_e[:, [0, 0, 1], [0, 1, 1]],
            diff.real, diff.imag], axis=1)

    v = np.asarray(brillouin_average(f, g))
    gg = Metric2D(coord, *map(float, v[0:3]))
    ge = Metric2D(coord, *map(float, v[3:6]))
    berry = v[6:8] + 1j * v[8:10]
    if n_sites is None:
        n_sites = g.N if hasattr(g, "N") else 1.0
    outer = np.real(np.outer(berry, berry.conj())) * n_sites
    cross = abs(weight_g * weight_e) ** 2 * outer
    total = Metric2D(coord,
                     float(wg * gg.g_tt + we * ge.g_tt + cross[0, 0]),
                     float(wg * gg.g_th + we * ge.g_th + 0.5 * (cross[0, 1] + cross[1, 0])),
                     float(wg * gg.g_hh + we * ge.g_hh + cross[1, 1]))
    return MetricDecomposition(total, gg, ge, berry, wg, we)


def write_metric_csv(path, rows) -> None:
    """rows: iterable of (t, x, Metric2D)."""
    from .io import write_csv
    write_csv(Path(path), ["t", "h", "g_tt", "g_th", "g_hh", "psd_flag"],
              [(t, x, m.g_tt, m.g_th, m.g_hh, int(m.is_psd())) for t, x, m in rows])

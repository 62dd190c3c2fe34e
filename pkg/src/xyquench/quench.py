"""Post-quench Nielsen complexity and Loschmidt echo.

After the coupling is switched on, mode k of the initial ground state is a
superposition of the quenched vacuum and the quenched pair excitation, with
mixing angle Omega_k = (theta_k(initial) - theta_k(quenched)) / 2.  Per mode

    |<psi_k(0)|psi_k(t)>|^2 = 1 - sin^2(2 Omega_k) sin^2(eps~_k t),

the complexity contribution is arccos(sqrt(.))^2 and the echo contribution
is log(.).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .core import (ModelParams, MomentumGrid, QuenchSpec, ThermoLimit, bogoliubov_angle,
                   brillouin_average, dispersion, momentum_modes)
from .errors import InvalidLimit, ResonanceClamped, UnsupportedRegime
from .static import GUARD_FACTOR, SeriesValue

CLAMP_FLOOR = 1e-15
LARGET_GUARD = 1e-2
# Time columns per quadrature call; bounds memory for long sweeps.
_T_CHUNK = 256


@dataclass(frozen=True)
class QuenchSeriesValue(SeriesValue):
    regular: float = 0.0


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def to_csv(self, path) -> None:
        from .io import write_csv
        write_csv(Path(path), ["t", "value", "label"],
                  [(t, v, self.label) for t, v in zip(self.times, self.values)])


def omega_angle(k, p: ModelParams, q: QuenchSpec):
    """Mixing angle Omega_k between initial and quenched Bogoliubov bases."""
    return 0.5 * (bogoliubov_angle(k, p) - bogoliubov_angle(k, q.quenched(p)))


def modulation(k, p: ModelParams, q: QuenchSpec):
    """sin^2(2 Omega_k), the envelope of the per-mode oscillations."""
    return np.sin(2.0 * omega_angle(k, p, q)) ** 2


def _overlap_sq(k, p: ModelParams, pq: ModelParams, t):
    """1 - sin^2(2 Omega_k) sin^2(eps~_k t), broadcast as (len(k), len(t))."""
    k = np.asarray(k, dtype=float)
    mod = np.sin(bogoliubov_angle(k, p) - bogoliubov_angle(k, pq)) ** 2
    eps = dispersion(k, pq)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return 1.0 - mod[:, None] * np.sin(eps[:, None] * t[None, :]) ** 2


def mode_terms(k, p: ModelParams, q: QuenchSpec, t):
    """Per-mode (C_Nk, L_k) arrays of shape (len(k), len(t)).

    The overlap is clamped into [1e-15, 1]; exact resonance would send
    L_k to -inf.
    """
    q.check()
    y = _overlap_sq(k, p, q.quenched(p), t)
    return _terms_from_overlap(y)


def _terms_from_overlap(y):
    if np.any(y < CLAMP_FLOOR):
        warnings.warn("resonant mode clamped", ResonanceClamped, stacklevel=3)
    y = np.clip(y, CLAMP_FLOOR, 1.0)
    phi = np.arccos(np.sqrt(y))
    return phi * phi, np.log(y)


def _observables(p: ModelParams, pq: ModelParams, t, g: MomentumGrid):
    """(C_N, log L) per site for each t, integrated on one shared mesh."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    cn = np.empty(t.size)
    le = np.empty(t.size)
    for s in range(0, t.size, _T_CHUNK):
        tc = t[s:s + _T_CHUNK]

        def integrand(k):
            c, l = _terms_from_overlap(_overlap_sq(k, p, pq, tc))
            return np.concatenate([c, -l], axis=1)

        out = np.atleast_1d(brillouin_average(integrand, g))
        cn[s:s + tc.size] = out[:tc.size]
        le[s:s + tc.size] = -out[tc.size:]
    return cn, le


def _scalar_or_array(x, t):
    return float(x[0]) if np.ndim(t) == 0 else x


def quench_observables(p: ModelParams, q: QuenchSpec, t, g: MomentumGrid = ThermoLimit()):
    """Nielsen complexity and log Loschmidt echo computed together.

    Both quantities are evaluated on the same quadrature mesh so that the
    pointwise bound -log L_k >= C_Nk carries over to the averages exactly.
    """
    q.check()
    cn, le = _observables(p, q.quenched(p), t, g)
    return _scalar_or_array(cn, t), _scalar_or_array(le, t)


def nielsen_quench(p: ModelParams, q: QuenchSpec, t, g: MomentumGrid = ThermoLimit()):
    """Per-site Nielsen complexity C_N(t) between the initial and evolved state."""
    return quench_observables(p, q, t, g)[0]


def loschmidt(p: ModelParams, q: QuenchSpec, t, g: MomentumGrid = ThermoLimit()):
    """Per-site log Loschmidt echo (<= 0)."""
    return quench_observables(p, q, t, g)[1]


def time_series(p: ModelParams, q: QuenchSpec, times, g: MomentumGrid = ThermoLimit(),
                label: str = "C_N") -> TimeSeries:
    cn, le = quench_observables(p, q, np.asarray(times, dtype=float), g)
    if label == "C_N":
        return TimeSeries(times, cn, label)
    if label == "-log L":
        return TimeSeries(times, -le, label)
    raise ValueError(f"unknown label {label!r}")


def _in_quench_guard(p: ModelParams, q: QuenchSpec) -> bool:
    d = abs(q.delta)
    pq = q.quenched(p)
    near = lambda h: min(abs(1 - h), abs(1 + h)) < GUARD_FACTOR * d
    if near(p.h) or near(pq.h):
        return True
    if abs(p.h) < 1 and (abs(p.gamma) < GUARD_FACTOR * d or abs(pq.gamma) < GUARD_FACTOR * d):
        return True
    return False


def smalltime_series(p: ModelParams, q: QuenchSpec, t: float) -> QuenchSeriesValue:
    """Lowest-order small-(t, delta) form of C_N (equally of -log L).

    Transverse quenches have closed forms on both sides of the Ising line;
    the anisotropic quench only for |h| < 1.
    """
    q.check()
    h, gam, d = p.h, p.gamma, q.delta
    ag = abs(gam)
    valid = not _in_quench_guard(p, q)
    if (q.c1, q.c2) == (1, 0):
        reg = -gam**2 * d**2 * t**4 / 12
        if abs(h) < 1:
            val = reg + ag * d**2 * t**2 / (2 * (ag + 1)) - h * gam**2 * d**3 * t**4 / (3 * (1 + ag) ** 2)
        else:
            a = np.sqrt(h * h + gam * gam - 1)
            ah = abs(h)
            val = (reg + gam**2 * d**2 * t**2 * (ah - a) / (2 * a * (1 - gam**2))
                   + np.sign(h) * gam**2 * d**3 * t**4 * (gam**2 - ah * (gam**2 + 1) * (a - ah) - 1)
                   / (3 * a * (1 - gam**2) ** 2))
        return QuenchSeriesValue(float(val), 4, valid, float(reg))
    if (q.c1, q.c2) == (0, 1):
        if abs(h) >= 1:
            raise UnsupportedRegime("anisotropic small-time series exists only for |h| < 1")
        reg = -d**2 * (4 * h * h + 1) * t**4 / 48
        b = ag * (ag + 5) - 8 * h**4 + 4 * (ag + 1) * (ag + 4) * h * h + 7
        val = (reg + d**2 * t**2 * (ag + 2 * ag * h * h + 1) / (4 * (ag + 1) ** 3)
               - np.sign(gam) * ag * d**3 * t**4 * (3 + ag * b) / (24 * (ag + 1) ** 5))
        return QuenchSeriesValue(float(val), 4, valid, float(reg))
    raise UnsupportedRegime("small-time series needs a pure transverse or anisotropic quench")


def larget_limit(p: ModelParams, q: QuenchSpec, g: MomentumGrid = ThermoLimit()) -> float:
    """Time-averaged complexity: sin^2(eps~ t) replaced by its mean 1/2."""
    q.check()
    pq = q.quenched(p)
    for hv in (p.h, pq.h):
        if min(abs(hv - 1), abs(hv + 1)) < LARGET_GUARD:
            raise InvalidLimit(f"h = {hv} lies on an Ising line")
    if q.c1 and abs(pq.h) < LARGET_GUARD:
        raise InvalidLimit("h + delta = 0 keeps every mode at the same frequency")

    def integrand(k):
        x = 0.5 * np.sin(bogoliubov_angle(k, p) - bogoliubov_angle(k, pq)) ** 2
        return np.arcsin(np.sqrt(x)) ** 2

    return brillouin_average(integrand, g)


def larget_series(p: ModelParams, delta: float) -> SeriesValue:
    """Large-time transverse-quench series; twice the static series at low order."""
    h, gam, d = p.h, p.gamma, delta
    ag = abs(gam)
    if abs(h) < 1:
        u = 1 - h * h
        val = (d**2 / (8 * ag * u) + h * d**3 / (8 * ag * u**2)
               - d**4 * (13 * gam**2 + (39 * gam**2 + 7) * h * h - 7) / (384 * ag**3 * (h * h - 1) ** 3))
        return SeriesValue(val, 4, min(abs(1 - h), abs(1 + h)) >= GUARD_FACTOR * abs(d))
    a = np.sqrt(h * h + gam * gam - 1)
    val = (gam**2 * d**2 * abs(h) / (8 * (h * h - 1) * a**3)
           - np.sign(h) * gam**2 * d**3 * (gam**2 + 4 * h**4 + (gam**2 - 3) * h * h - 1)
           / (16 * (h * h - 1) ** 2 * a**5))
    return SeriesValue(float(val), 3, min(abs(1 - h), abs(1 + h)) >= GUARD_FACTOR * abs(d))


@dataclass
class ModulationProfile:
    k: np.ndarray
    values: np.ndarray
    argmax: float
    max_value: float


def modulation_profile(p: ModelParams, q: QuenchSpec, g: MomentumGrid = ThermoLimit(),
                       k=None) -> ModulationProfile:
    """sin^2(2 Omega_k) on the grid nodes (or on ``k``), with a refined maximum."""
    q.check()
    ks = np.sort(np.asarray(momentum_modes(g) if k is None else k, dtype=float))
    vals = modulation(ks, p, q)
    i = int(np.argmax(vals))
    kmax, vmax = float(ks[i]), float(vals[i])
    if 0 < i < ks.size - 1 and vmax > 0:
        res = minimize_scalar(lambda x: -float(modulation(np.array([x]), p, q)[0]),
                              bounds=(ks[i - 1], ks[i + 1]), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > vmax:
            kmax, vmax = float(res.x), float(-res.fun)
    return ModulationProfile(ks, vals, kmax, vmax)


def mode_profile_rows(p: ModelParams, q: QuenchSpec, t: float, k):
    """Rows (k, modulation, C_Nk, L_k) for the momentum-space figures."""
    k = np.asarray(k, dtype=float)
    c, l = mode_terms(k, p, q, t)
    return list(zip(k, modulation(k, p, q), c[:, 0], l[:, 0]))


def max_quenched_energy(p: ModelParams, q: QuenchSpec, n: int = 4097) -> float:
    ks = np.linspace(0.0, np.pi, n)
    return float(np.max(dispersion(ks, q.quenched(p))))


@dataclass
class OscillationEnvelope:
    amplitude: float
    mean: float
    series: TimeSeries = field(repr=False)

    @property
    def relative(self) -> float:
        return self.amplitude / self.mean if self.mean else 0.0


def oscillation_envelope(p: ModelParams, q: QuenchSpec, t_window=(50.0, 150.0),
                         g: MomentumGrid = ThermoLimit(), samples_per_period: int = 20) -> OscillationEnvelope:
    """Half peak-to-peak of C_N(t) over a time window.

    The window is sampled with at least ``samples_per_period`` points per
    shortest period 2 pi / max_k eps~_k.
    """
    t0, t1 = map(float, t_window)
    period = 2 * np.pi / max_quenched_energy(p, q)
    if t1 - t0 <= 10 * period:
        raise ValueError("window must span more than 10 natural periods")
    n = int(np.ceil((t1 - t0) / period * samples_per_period)) + 1
    times = np.linspace(t0, t1, n)
    ts = time_series(p, q, times, g)
    amp = 0.5 * (ts.values.max() - ts.values.min())
    return OscillationEnvelope(float(amp), float(ts.values.mean()), ts)

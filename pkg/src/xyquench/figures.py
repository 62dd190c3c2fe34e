"""Data behind each published figure, written as CSV.

Every builder takes the output directory plus optional overrides and returns
(list of written files, manifest dict).  The manifest lists every parameter
and tolerance needed to regenerate the numbers.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .core import ModelParams, QuenchSpec, ThermoLimit
from .errors import ResonanceClamped, XYQuenchError
from .io import write_csv

GAMMA = 0.5
DELTA = 0.1
NAN = float("nan")


def _grid(atol):
    return ThermoLimit(atol=atol)


def _safe(f, *args):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResonanceClamped)
            return f(*args)
    except XYQuenchError:
        return NAN


def _axis(lo, hi, n):
    return [float(x) for x in np.linspace(lo, hi, n)]


def figure1(out: Path, resolution: int = 50, atol: float = 1e-10, workers: int = 1):
    from .static import triangle_map
    h_range, g_range = (-2.0, 2.0), (0.1, 1.0)
    tm = triangle_map(h_range, g_range, DELTA, resolution, _grid(atol), workers=workers)
    path = out / "triangle_map.csv"
    out.mkdir(parents=True, exist_ok=True)
    tm.to_csv(path)
    return [path], {"delta": DELTA, "h_range": list(h_range), "gamma_range": list(g_range),
                    "resolution": resolution, "atol": atol, "sign_corrected": True,
                    "order": "h_first", "argmax": list(tm.argmax())}


def _pair(f, *args):
    v = _safe(f, *args)
    return v if isinstance(v, tuple) else (NAN, NAN)


def figure2(out: Path, resolution: int = 200, atol: float = 1e-10, workers: int = 1):
    out.mkdir(parents=True, exist_ok=True)
    times, hs = [0.5, 1.0, 1.5], _axis(-2.0, 2.0, resolution)
    path = _curves(out / "cn_vs_h.csv", "h", hs, times, atol,
                   lambda x: (ModelParams(x, GAMMA), QuenchSpec.transverse(DELTA)))
    return [path], {"gamma": GAMMA, "delta": DELTA, "quench": "transverse", "times": times,
                    "h_range": [-2.0, 2.0], "resolution": resolution, "atol": atol}


def _curves(path: Path, key: str, xs, times, atol, make):
    from .quench import quench_observables, smalltime_series
    g = _grid(atol)
    rows = []
    for t in times:
        for x in xs:
            p, q = make(x)
            try:
                s = smalltime_series(p, q, t)
                series, valid = s.value, int(s.valid)
            except XYQuenchError:
                series, valid = NAN, 0
            cn, le = _pair(quench_observables, p, q, t, g)
            rows.append((t, x, series, valid, cn, -le))
    write_csv(path, ["t", key, "C_N_series", "series_valid", "C_N", "minus_log_L"], rows)
    return path


def figure3(out: Path, resolution: int = 200, atol: float = 1e-10, workers: int = 1):
    out.mkdir(parents=True, exist_ok=True)
    h = 0.5
    times, gs = [0.5, 1.0, 1.5], _axis(-1.0, 1.0, resolution)
    path = _curves(out / "cn_vs_gamma.csv", "gamma", gs, times, atol,
                   lambda x: (ModelParams(h, x), QuenchSpec.anisotropic(DELTA)))
    return [path], {"h": h, "delta": DELTA, "quench": "anisotropic", "times": times,
                    "gamma_range": [-1.0, 1.0], "resolution": resolution, "atol": atol}


def figure4(out: Path, resolution: int | None = None, atol: float | None = None,
            workers: int = 1):
    from .geodesics import geodesic_shoot, smalltime_field
    out.mkdir(parents=True, exist_ok=True)
    starts = [(0.88, 0.1), (0.90, 0.05), (0.92, 0.01)]
    t0, dh, root = 0.01, -0.1, "positive"
    rows, reasons = [], {}
    for h0, d in starts:
        sol = geodesic_shoot(smalltime_field(GAMMA, QuenchSpec.transverse(d)), t0, h0, dh, root=root)
        reasons[str(h0)] = sol.reason
        rows += [(h0, d, a, b, c) for a, b, c in zip(sol.tau, sol.t, sol.x)]
    path = out / "geodesics_smalltime.csv"
    write_csv(path, ["h0", "delta", "tau", "t", "h"], rows)
    return [path], {"gamma": GAMMA, "starts_h0_delta": [list(s) for s in starts], "t0": t0,
                    "dh_dtau": dh, "root": root, "metric": "smalltime closed form",
                    "rtol": 1e-9, "atol": 1e-12, "stop_h": 1 - 1e-4, "reasons": reasons}


def _profile(out: Path, name: str, h: float, times, resolution: int):
    from .quench import mode_terms, modulation
    p, q = ModelParams(h, GAMMA), QuenchSpec.transverse(DELTA)
    # midpoints keep k = pi (gapless when the quench lands on h = 1) off the grid
    k = (np.arange(resolution) + 0.5) * np.pi / resolution
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResonanceClamped)
        c, l = mode_terms(k, p, q, np.asarray(times, dtype=float))
    header = ["k", "modulation"]
    for t in times:
        header += [f"C_Nk_t{t:g}", f"minus_log_L_k_t{t:g}"]
    rows = []
    for i, kk in enumerate(k):
        row = [kk, modulation(np.array([kk]), p, q)[0]]
        for j in range(len(times)):
            row += [c[i, j], -l[i, j]]
        rows.append(row)
    path = out / name
    write_csv(path, header, rows)
    return path


def _profile_figure(h, times):
    def build(out: Path, resolution: int = 2001, atol: float | None = None, workers: int = 1):
        out.mkdir(parents=True, exist_ok=True)
        path = _profile(out, "mode_profile.csv", h, times, resolution)
        return [path], {"h": h, "gamma": GAMMA, "delta": DELTA, "quench": "transverse",
                        "times": times, "k_grid": "midpoints (j + 1/2) pi / resolution",
                        "resolution": resolution,
                        "overlap_clamp": 1e-15}
    return build


figure5 = _profile_figure(0.8, [20.0, 200.0])
figure6 = _profile_figure(0.95, [200.0])
figure7 = _profile_figure(0.9, [200.0])


def figure8(out: Path, resolution: int = 2001, atol: float = 1e-10, workers: int = 1):
    from .quench import larget_limit, quench_observables
    out.mkdir(parents=True, exist_ok=True)
    hs, t_range = [0.8, 0.9, 1.0, 1.1], (0.0, 200.0)
    times = np.linspace(*t_range, resolution)
    g = _grid(atol)
    rows = []
    for h in hs:
        p, q = ModelParams(h, GAMMA), QuenchSpec.transverse(DELTA)
        lim = _safe(larget_limit, p, q, g)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResonanceClamped)
            cn, le = quench_observables(p, q, times, g)
        rows += [(h, t, a, -b, lim) for t, a, b in zip(times, cn, le)]
    path = out / "time_series.csv"
    write_csv(path, ["h", "t", "C_N", "minus_log_L", "C_N_larget"], rows)
    return [path], {"gamma": GAMMA, "delta": DELTA, "quench": "transverse", "h_values": hs,
                    "t_range": list(t_range), "resolution": resolution, "atol": atol,
                    "larget_guard": 0.01}


def figure9(out: Path, resolution: int = 200, atol: float = 1e-10, workers: int = 1):
    from .geodesics import geodesic_shoot, larget_field
    from .geometry import qim_closed, qim_dephased
    from .quench import larget_limit, larget_series, quench_observables
    out.mkdir(parents=True, exist_ok=True)
    g = _grid(atol)
    q = QuenchSpec.transverse(DELTA)
    files = []

    t_cn = 1000.0
    rows = []
    for h in _axis(-2.0, 2.0, resolution):
        p = ModelParams(h, GAMMA)
        cn, le = _pair(quench_observables, p, q, t_cn, g)
        s = larget_series(p, DELTA)
        rows.append((h, cn, -le, s.value, int(s.valid), _safe(larget_limit, p, q, g)))
    files.append(out / "cn_larget.csv")
    write_csv(files[-1], ["h", "C_N", "minus_log_L", "C_N_series", "series_valid", "C_N_larget"],
              rows)

    t_m = 200.0
    rows = []
    for h in _axis(-0.85, 0.85, resolution):
        p = ModelParams(h, GAMMA)
        closed = qim_closed(p, q, t_m, "larget").g_hh
        rows.append((h, closed, _safe(lambda: qim_dephased(p, q, t_m, "h", g).g_hh)))
    files.append(out / "ghh_larget.csv")
    write_csv(files[-1], ["h", "g_hh_closed", "g_hh_numeric"], rows)

    t0, h0s, root = 200.0, [0.8, 0.85, 0.9], "spatial"
    field = larget_field(GAMMA, q)
    rows, reasons = [], {}
    for h0 in h0s:
        sol = geodesic_shoot(field, t0, h0, 1.0, root=root)
        reasons[str(h0)] = sol.reason
        rows += [(h0, a, b, c) for a, b, c in zip(sol.tau, sol.t, sol.x)]
    files.append(out / "geodesics_larget.csv")
    write_csv(files[-1], ["h0", "tau", "t", "h"], rows)

    return files, {"gamma": GAMMA, "delta": DELTA, "quench": "transverse", "atol": atol,
                   "cn_time": t_cn, "cn_h_range": [-2.0, 2.0], "metric_time": t_m,
                   "metric_h_range": [-0.85, 0.85], "metric_numeric": "dephased",
                   "resolution": resolution, "geodesic_t0": t0, "geodesic_h0": h0s,
                   "geodesic_root": root, "geodesic_reasons": reasons,
                   "rtol": 1e-9, "stop_h": 1 - 1e-4}


FIGURES = {1: figure1, 2: figure2, 3: figure3, 4: figure4, 5: figure5, 6: figure6,
           7: figure7, 8: figure8, 9: figure9}

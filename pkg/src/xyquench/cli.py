"""Command-line front end.

Every subcommand reads parameters from an optional ``key=value`` file
(``--config``; ``#`` starts a comment) and from flags; flags win.  Output is
CSV with 17 significant digits.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import shutil
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from .core import FiniteChain, ModelParams, QuenchSpec, ThermoLimit
from .errors import ConfigError, GaplessMode, InvalidLimit, ResonanceClamped, XYQuenchError
from .io import fmt, write_csv

log = logging.getLogger("xyquench")

THREADS_ENV = "XYQUENCH_THREADS"


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _intlist(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _grid(s: str) -> str:
    s = s.strip().lower()
    if s != "thermo":
        int(s)
    return s


# key -> (parser, help)
KEYS = {
    "h": (float, "transverse field"),
    "gamma": (float, "anisotropy"),
    "delta": (float, "coupling to the central spin"),
    "c1": (int, "1 if the quench shifts h"),
    "c2": (int, "1 if the quench shifts gamma"),
    "t": (float, "time"),
    "t_min": (float, "first time of a time grid"),
    "t_max": (float, "last time of a time grid"),
    "t_num": (int, "number of times"),
    "h_min": (float, "first h of an h grid"),
    "h_max": (float, "last h of an h grid"),
    "h_num": (int, "number of h values"),
    "gamma_min": (float, "first gamma of a gamma grid"),
    "gamma_max": (float, "last gamma of a gamma grid"),
    "resolution": (int, "grid points per axis"),
    "direction": (str, "static shift: h, gamma or diagonal"),
    "grid": (_grid, "'thermo' or an odd chain length N"),
    "atol": (float, "absolute quadrature tolerance (thermodynamic limit)"),
    "workers": (int, "worker threads"),
    "coord": (str, "second metric coordinate: h or gamma"),
    "regime": (str, "metric: numeric, dephased, smalltime or larget"),
    "subtract_ground": (_bool, "remove the delta = 0 metric"),
    "field": (str, "geodesic metric: smalltime, larget or numeric"),
    "t0": (float, "initial time of the geodesic"),
    "h0": (float, "initial h of the geodesic"),
    "dh_dtau": (float, "initial dh/dtau"),
    "root": (str, "dt/dtau root: positive, negative, larger, smaller or spatial"),
    "lambda_sel": (str, "scaling parameter: h or gamma"),
    "Ns": (_intlist, "comma separated odd chain lengths"),
    "observable": (str, "sweep quantity: cn, loschmidt, static, triangle, larget"),
    "out": (str, "output file (directory for figure)"),
}

COMMON = ("grid", "atol")
COMMANDS = {
    "static": (("h", "gamma", "delta", "direction", "out") + COMMON, ("h", "gamma", "delta")),
    "triangle-map": (("h_min", "h_max", "gamma_min", "gamma_max", "delta", "resolution",
                      "workers", "out") + COMMON, ()),
    "quench": (("h", "gamma", "delta", "c1", "c2", "t", "t_min", "t_max", "t_num", "out")
               + COMMON, ("h", "gamma", "delta")),
    "loschmidt": (("h", "gamma", "delta", "c1", "c2", "t", "t_min", "t_max", "t_num", "out")
                  + COMMON, ("h", "gamma", "delta")),
    "qim": (("h", "gamma", "delta", "c1", "c2", "t", "coord", "regime", "subtract_ground",
             "h_min", "h_max", "h_num", "out") + COMMON, ("gamma", "delta", "t")),
    "geodesic": (("field", "gamma", "delta", "t0", "h0", "dh_dtau", "root", "out") + COMMON,
                 ("gamma", "delta", "t0", "h0")),
    "scaling": (("h", "gamma", "delta", "c1", "c2", "t", "Ns", "lambda_sel", "out"),
                ("h", "gamma", "delta", "t", "Ns")),
    "figure": (("out", "resolution", "workers") + COMMON, ()),
    "sweep": (("observable", "h", "gamma", "delta", "c1", "c2", "t", "direction", "workers",
               "out") + COMMON, ("observable", "h", "gamma", "delta", "out")),
}

DEFAULTS = {
    "c1": 1, "c2": 0, "grid": "thermo", "atol": 1e-10, "direction": "h", "coord": "h",
    "regime": "numeric", "subtract_ground": False, "field": "smalltime", "dh_dtau": -0.1,
    "root": "positive", "lambda_sel": "h", "delta": 0.1,
}

RANGED = ("h", "gamma", "delta", "t")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.params.get(key, default)


def _parse_value(key: str, raw: str, line: int | None, ranged: bool = False):
    parser = KEYS[key][0]
    try:
        if ranged and key in RANGED and (":" in raw or "," in raw):
            return _parse_range(raw)
        return parser(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}': {raw!r} ({exc})", key, line) from None


def _parse_range(raw: str) -> list[float]:
    """'a:b:n' (n evenly spaced values, inclusive) or 'x,y,z'."""
    if ":" in raw:
        a, b, n = raw.split(":")
        n = int(n)
        if n < 1:
            raise ValueError("range needs at least one point")
        return [float(x) for x in np.linspace(float(a), float(b), n)]
    return [float(x) for x in raw.split(",") if x.strip()]


def read_config_file(path, allowed, ranged: bool = False) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key=value, got {body!r}", None, n)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}'", key, n)
        out[key] = (_parse_value(key, raw, n, ranged), n)
    return out


def parse_config(command: str, flags: dict | None = None, config_file=None) -> RunConfig:
    """Merge defaults, the config file and flags (in that order of precedence)."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command '{command}'", command)
    allowed, required = COMMANDS[command]
    ranged = command == "sweep"
    params = {k: v for k, v in DEFAULTS.items() if k in allowed}
    sources = {k: "default" for k in params}
    if config_file is not None:
        for key, (val, n) in read_config_file(config_file, allowed, ranged).items():
            params[key] = val
            sources[key] = f"file:{n}"
    for key, raw in (flags or {}).items():
        if raw is None:
            continue
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}'", key)
        params[key] = _parse_value(key, raw, None, ranged) if isinstance(raw, str) else raw
        sources[key] = "flag"
    missing = [k for k in required if k not in params]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}", missing[0])
    for key in ("c1", "c2"):
        if key in params and params[key] not in (0, 1):
            raise ConfigError(f"'{key}' must be 0 or 1", key)
    return RunConfig(command, params, sources)


def _momentum_grid(cfg: RunConfig):
    grid = cfg.get("grid", "thermo")
    if grid == "thermo":
        return ThermoLimit(atol=cfg.get("atol", 1e-10))
    try:
        return FiniteChain(int(grid))
    except ValueError as exc:
        raise ConfigError(str(exc), "grid") from None


def _workers(cfg: RunConfig) -> int:
    if "workers" in cfg.params:
        return max(1, int(cfg.params["workers"]))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer", THREADS_ENV) from None
    return 1


def _params(cfg: RunConfig) -> tuple[ModelParams, QuenchSpec]:
    q = QuenchSpec(cfg.get("delta"), cfg.get("c1", 1), cfg.get("c2", 0))
    try:
        q.check()
    except ValueError as exc:
        raise ConfigError(str(exc), "c1") from None
    return ModelParams(cfg.get("h"), cfg.get("gamma")), q


def _times(cfg: RunConfig) -> np.ndarray:
    if "t_min" in cfg.params or "t_max" in cfg.params:
        try:
            return np.linspace(cfg.params["t_min"], cfg.params["t_max"], cfg.get("t_num", 101))
        except KeyError as exc:
            raise ConfigError("t_min and t_max go together", exc.args[0]) from None
    if "t" not in cfg.params:
        raise ConfigError("give t or t_min/t_max", "t")
    return np.array([cfg.params["t"]])


def _emit(cfg: RunConfig, header, rows, stdout) -> None:
    out = cfg.get("out")
    if out:
        write_csv(Path(out), header, rows)
        return
    w = csv.writer(stdout, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])


# -- subcommands -------------------------------------------------------------


def cmd_static(cfg: RunConfig, stdout) -> None:
    from .static import nielsen_series, nielsen_static
    p = ModelParams(cfg.get("h"), cfg.get("gamma"))
    d = cfg.get("delta")
    direction = cfg.get("direction")
    shifts = {"h": (d, 0.0), "gamma": (0.0, d), "diagonal": (d, d)}
    if direction not in shifts:
        raise ConfigError(f"direction must be one of {sorted(shifts)}", "direction")
    exact = nielsen_static(p, p.shifted(*shifts[direction]), _momentum_grid(cfg))
    try:
        s = nielsen_series(p, d, direction)
        series, order, valid = s.value, s.order, int(s.valid)
    except XYQuenchError:
        series, order, valid = float("nan"), 0, 0
    _emit(cfg, ["h", "gamma", "delta", "direction", "exact", "series", "order", "valid"],
          [(p.h, p.gamma, d, direction, exact, series, order, valid)], stdout)


def cmd_triangle_map(cfg: RunConfig, stdout) -> None:
    from .static import triangle_map
    tm = triangle_map((cfg.get("h_min", -2.0), cfg.get("h_max", 2.0)),
                      (cfg.get("gamma_min", 0.1), cfg.get("gamma_max", 1.0)),
                      cfg.get("delta"), cfg.get("resolution", 50), _momentum_grid(cfg),
                      workers=_workers(cfg))
    rows = [(h, g, tm.values[j, i]) for j, g in enumerate(tm.gamma) for i, h in enumerate(tm.h)]
    _emit(cfg, ["h", "gamma", "delta_defect"], rows, stdout)


def cmd_quench(cfg: RunConfig, stdout, label: str = "C_N") -> None:
    from .quench import time_series
    p, q = _params(cfg)
    ts = time_series(p, q, _times(cfg), _momentum_grid(cfg), label=label)
    _emit(cfg, ["t", "value", "label"], [(t, v, ts.label) for t, v in zip(ts.times, ts.values)],
          stdout)


def cmd_qim(cfg: RunConfig, stdout) -> None:
    from .geometry import Metric2D, qim_closed, qim_dephased, qim_sum
    coord = cfg.get("coord")
    if coord not in ("h", "gamma"):
        raise ConfigError("coord must be h or gamma", "coord")
    regime = cfg.get("regime")
    if regime not in ("numeric", "dephased", "smalltime", "larget"):
        raise ConfigError("regime must be numeric, dephased, smalltime or larget", "regime")
    if "h_min" in cfg.params:
        hs = np.linspace(cfg.params["h_min"], cfg.get("h_max", cfg.params["h_min"]),
                         cfg.get("h_num", 51))
    elif "h" in cfg.params:
        hs = np.array([cfg.params["h"]])
    else:
        raise ConfigError("give h or h_min/h_max", "h")
    t = cfg.get("t")
    g = _momentum_grid(cfg)
    rows = []
    for h in hs:
        p, q = _params(RunConfig(cfg.command, {**cfg.params, "h": float(h)}))
        try:
            if regime == "numeric":
                m = qim_sum(p, q, t, coord, g, subtract_ground=cfg.get("subtract_ground"))
            elif regime == "dephased":
                m = qim_dephased(p, q, t, coord, g)
            else:
                m = qim_closed(p, q, t, regime, coord)
        except XYQuenchError as exc:
            if hs.size == 1:
                raise
            log.warning("h=%s: %s", h, exc)
            m = Metric2D(coord, np.nan, np.nan, np.nan)
        psd = int(m.is_psd()) if np.all(np.isfinite(m.matrix())) else 0
        rows.append((t, h, m.g_tt, m.g_th, m.g_hh, psd))
    _emit(cfg, ["t", "h", "g_tt", "g_th", "g_hh", "psd_flag"], rows, stdout)


def _field(cfg: RunConfig):
    from .geodesics import larget_field, numeric_field, smalltime_field
    q = QuenchSpec(cfg.get("delta"), 1, 0)
    kind = cfg.get("field")
    gam = cfg.get("gamma")
    if kind == "smalltime":
        return smalltime_field(gam, q)
    if kind == "larget":
        return larget_field(gam, q)
    if kind == "numeric":
        g = _momentum_grid(cfg)
        if isinstance(g, ThermoLimit) and cfg.sources.get("atol", "default") == "default":
            # the coupling-induced metric is ~1e-6; geodesics need it far below that
            g = ThermoLimit(atol=1e-16)
        return numeric_field(gam, q, subtract_ground=True, mask="nondegenerate", g=g)
    raise ConfigError("field must be smalltime, larget or numeric", "field")


def cmd_geodesic(cfg: RunConfig, stdout) -> None:
    from .geodesics import geodesic_shoot
    sol = geodesic_shoot(_field(cfg), cfg.get("t0"), cfg.get("h0"), cfg.get("dh_dtau"),
                         root=cfg.get("root"))
    _emit(cfg, ["tau", "t", "h"], list(zip(sol.tau, sol.t, sol.x)), stdout)


def cmd_scaling(cfg: RunConfig, stdout) -> None:
    from .scaling import scaling_run
    p, q = _params(cfg)
    sel = cfg.get("lambda_sel")
    if sel not in ("h", "gamma"):
        raise ConfigError("lambda_sel must be h or gamma", "lambda_sel")
    try:
        run = scaling_run(p, q, cfg.get("t"), cfg.get("Ns"), sel, workers=_workers(cfg))
    except ValueError as exc:
        if isinstance(exc, XYQuenchError):
            raise
        raise ConfigError(str(exc), "Ns") from None
    _emit(cfg, ["N", "derivative"], list(zip(run.Ns.tolist(), run.derivatives)), stdout)


# -- sweep -------------------------------------------------------------------


SWEEP_OBSERVABLES = ("cn", "loschmidt", "static", "triangle", "larget")


def _sweep_point(obs: str, point: dict, g, direction: str) -> float:
    from .quench import larget_limit, quench_observables
    from .static import nielsen_static, triangle_defect
    p = ModelParams(point["h"], point["gamma"])
    d = point["delta"]
    q = QuenchSpec(d, point["c1"], point["c2"])
    if obs in ("cn", "loschmidt"):
        cn, le = quench_observables(p, q, point["t"], g)
        return cn if obs == "cn" else -le
    if obs == "static":
        shifts = {"h": (d, 0.0), "gamma": (0.0, d), "diagonal": (d, d)}
        return nielsen_static(p, p.shifted(*shifts[direction]), g)
    if obs == "triangle":
        return triangle_defect(p, d, g)
    return larget_limit(p, q, g)


def _sweep_points(cfg: RunConfig) -> tuple[list[str], list[dict]]:
    obs = cfg.get("observable")
    if obs not in SWEEP_OBSERVABLES:
        raise ConfigError(f"observable must be one of {', '.join(SWEEP_OBSERVABLES)}", "observable")
    if obs in ("cn", "loschmidt") and "t" not in cfg.params:
        raise ConfigError("cn and loschmidt sweeps need t", "t")
    axes = [k for k in RANGED if k in cfg.params]
    values = [cfg.params[k] if isinstance(cfg.params[k], list) else [cfg.params[k]] for k in axes]
    points = []
    for combo in product(*values):
        pt = dict(zip(axes, combo))
        pt.setdefault("t", 0.0)
        pt["c1"], pt["c2"] = cfg.get("c1", 1), cfg.get("c2", 0)
        points.append(pt)
    return axes, points


def _on_critical_line(pt: dict, tol: float = 1e-12) -> bool:
    """True if the initial or quenched point sits on |h| = 1 or on gamma = 0, |h| < 1."""
    d = pt["delta"]
    for h, gam in ((pt["h"], pt["gamma"]), (pt["h"] + pt["c1"] * d, pt["gamma"] + pt["c2"] * d)):
        if abs(abs(h) - 1) < tol or (abs(gam) < tol and abs(h) < 1):
            return True
    return False


def _sweep_fingerprint(cfg: RunConfig) -> str:
    return json.dumps({k: cfg.params[k] for k in sorted(cfg.params) if k not in ("out", "workers")},
                      sort_keys=True)


def cmd_sweep(cfg: RunConfig, stdout) -> None:
    """Cartesian sweep; rows in input order, resumable from ``<out>.partial``.

    Completed rows are appended to the partial file as they finish; a rerun
    with the same configuration skips them.  Failures at single points are
    logged and recorded in the status column.
    """
    axes, points = _sweep_points(cfg)
    out = Path(cfg.get("out"))
    partial = out.with_name(out.name + ".partial")
    fingerprint = _sweep_fingerprint(cfg)
    done: dict[int, list[str]] = {}
    if partial.exists():
        lines = partial.read_text().splitlines()
        if lines and lines[0] == fingerprint:
            for row in csv.reader(lines[1:]):
                if len(row) == len(axes) + 3:
                    done[int(row[0])] = row[1:]
        else:
            log.warning("partial file %s belongs to a different sweep; starting over", partial)
            done = {}
    if not done:
        partial.parent.mkdir(parents=True, exist_ok=True)
        partial.write_text(fingerprint + "\n")
    g = _momentum_grid(cfg)
    obs, direction = cfg.get("observable"), cfg.get("direction", "h")

    def run(i):
        pt = points[i]
        critical = _on_critical_line(pt)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ResonanceClamped)
                val, status = _sweep_point(obs, pt, g, direction), "critical" if critical else "ok"
        except XYQuenchError as exc:
            log.warning("point %d %s: %s", i, pt, exc)
            val = float("nan")
            status = "critical" if critical or isinstance(exc, (GaplessMode, InvalidLimit)) \
                else "failed"
        return i, [fmt(pt[k]) for k in axes] + [fmt(val), status]

    todo = [i for i in range(len(points)) if i not in done]
    with open(partial, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        workers = _workers(cfg)
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                results = ex.map(run, todo)
                for i, row in results:
                    done[i] = row
                    w.writerow([i] + row)
                    fh.flush()
        else:
            for i in todo:
                _, row = run(i)
                done[i] = row
                w.writerow([i] + row)
                fh.flush()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(axes + [obs, "status"])
    for i in range(len(points)):
        w.writerow(done[i])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(buf.getvalue())
    partial.unlink()


# -- figures -----------------------------------------------------------------


def cmd_figure(cfg: RunConfig, stdout, n: int) -> None:
    from . import figures
    if n not in figures.FIGURES:
        raise ConfigError(f"figure number must be 1..{len(figures.FIGURES)}", "n")
    out = Path(cfg.get("out") or f"figure{n}")
    existed = out.exists()
    before = set(out.iterdir()) if existed else set()
    opts = {k: cfg.params[k] for k in ("resolution", "atol") if cfg.sources.get(k) in ("flag",)
            or str(cfg.sources.get(k, "")).startswith("file")}
    opts["workers"] = _workers(cfg)
    try:
        files, manifest = figures.FIGURES[n](out, **opts)
    except BaseException:
        if existed:
            for f in set(out.iterdir()) - before:
                if f.is_dir():
                    shutil.rmtree(f)
                else:
                    f.unlink()
        else:
            shutil.rmtree(out, ignore_errors=True)
        raise
    manifest.update({"figure": n, "package_version": __version__,
                     "files": [f.name for f in files]})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(out / "manifest.json", file=stdout)


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xyquench", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (allowed, _required) in COMMANDS.items():
        sp = sub.add_parser(name)
        if name == "figure":
            sp.add_argument("n", type=int, help="figure number 1..9")
        sp.add_argument("--config", help="key=value parameter file")
        for key in allowed:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                            help=KEYS[key][1])
    return ap


HANDLERS = {
    "static": cmd_static,
    "triangle-map": cmd_triangle_map,
    "quench": lambda c, o: cmd_quench(c, o, "C_N"),
    "loschmidt": lambda c, o: cmd_quench(c, o, "-log L"),
    "qim": cmd_qim,
    "geodesic": cmd_geodesic,
    "scaling": cmd_scaling,
    "sweep": cmd_sweep,
}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    allowed = COMMANDS[args.command][0]
    flags = {k: getattr(args, k) for k in allowed}
    try:
        cfg = parse_config(args.command, flags, args.config)
        if args.command == "figure":
            cmd_figure(cfg, stdout, args.n)
        else:
            HANDLERS[args.command](cfg, stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except XYQuenchError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Batch front-end: ``fracpearson run|validate|compare <config>``.

A config is one JSON or YAML mapping::

    task: compare              # eval_gml | phi | mean_inverse | corr |
                               # corr_asymptotic | simulate | compare | density
    model: {a0: 0, a1: -1, d0: 1}        # optional "class" is checked
    mixture: {orders: [0.3, 0.8], weights: [0.5, 0.5]}
    grid: {points: [[1, 0.5], [2, 1]]}   # or t/s lists (outer product)
    simulation: {n_paths: 100000, dtau: 0.001}
    seed: 7
    output: {dir: out, prefix: run, plots: [loglog_corr], ensemble: csv}

Every run writes ``<prefix>.csv`` and ``<prefix>_manifest.json``; the manifest
echoes the fully resolved config, so ``fracpearson run <manifest>`` repeats the
run byte for byte.  Files are written only after all computation succeeded.

Exit codes: 0 success, 2 invalid config, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .correlation import (QuadraturePolicy, corr_asymptotic, corr_asymptotic_n,
                          corr_time_changed, corr_time_changed_n)
from .errors import FracPearsonError
from .laplace import InversionPolicy
from .mlf import EvalPolicy, gml
from .pearson import (PearsonClass, PearsonModel, classify,
                      transition_density_time_changed)
from .simulate import SimConfig, empirical_corr, simulate_ensemble
from .subordinator import StableMixture, laplace_functional, mean_inverse, mean_inverse_n

__all__ = ["main", "load_config", "resolve_config", "run", "emit_plot_data", "Results",
           "ConfigError", "HEADERS", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
TASKS = ("eval_gml", "phi", "mean_inverse", "corr", "corr_asymptotic", "simulate",
         "compare", "density")
PLOT_STYLES = ("loglog_corr", "phi_decay", "density_heatmap")
HEADERS = {
    "eval_gml": ("z", "value"),
    "phi": ("theta", "t", "phi"),
    "mean_inverse": ("t", "mean_inverse"),
    "corr": ("t", "s", "corr_analytic"),
    "corr_asymptotic": ("t", "s", "corr_asymptotic"),
    "simulate": ("path_id", "t", "E", "X"),
    "compare": ("t", "s", "corr_analytic", "corr_mc", "mc_stderr", "z_score"),
    "density": ("t", "y", "x", "density"),
}
_TOP_KEYS = {"task", "model", "mixture", "grid", "gml", "simulation", "policies", "seed",
             "output", "asymptotic"}
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    """Config is malformed or misses a task-specific field."""


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def load_config(path) -> dict:
    """Parse a JSON or YAML file; a run manifest yields its embedded config."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        if str(path).endswith(".json"):
            data = json.loads(text)
        else:
            import yaml
            data = yaml.safe_load(text)
    except Exception as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    if "manifest_version" in data:
        data = data["config"]
    return data


def _floats(values, name):
    try:
        out = [float(v) for v in np.atleast_1d(values)]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of numbers") from exc
    if not out or not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} must be a non-empty list of finite numbers")
    return out


def _need(cfg, key, task):
    if cfg.get(key) is None:
        raise ConfigError(f"task {task!r} requires '{key}'")
    return cfg[key]


def _geomspace(spec, name):
    if isinstance(spec, dict):
        try:
            lo, hi, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{name} geometric grid needs start, stop, num") from exc
        if not (0 < lo < hi and num >= 2):
            raise ConfigError(f"{name} geometric grid needs 0 < start < stop and num >= 2")
        return [float(v) for v in np.geomspace(lo, hi, num)]
    return _floats(spec, name)


def resolve_config(raw: dict) -> dict:
    """Validate ``raw`` and return a copy with every default made explicit.

    Raises :class:`ConfigError` (or the library's domain errors) on the first
    violated invariant.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = copy.deepcopy(raw)
    task = cfg.get("task")
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    cfg["seed"] = seed

    if task != "eval_gml":
        m = _need(cfg, "mixture", task)
        cfg["mixture"] = {"orders": _floats(m.get("orders"), "mixture.orders"),
                          "weights": _floats(m.get("weights"), "mixture.weights")}
        _mixture(cfg)
    if task in ("corr", "corr_asymptotic", "simulate", "compare", "density"):
        m = _need(cfg, "model", task)
        model = {k: float(m.get(k, 0.0)) for k in ("a0", "a1", "d0", "d1", "d2")}
        if "class" in m:
            model["class"] = str(m["class"])
        cfg["model"] = model
        _model(cfg)

    grid = dict(cfg.get("grid") or {})
    if task == "eval_gml":
        g = _need(cfg, "gml", task)
        try:
            cfg["gml"] = {"alpha": float(g["alpha"]), "beta": float(g["beta"]),
                          "gamma": float(g.get("gamma", 1.0))}
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("gml needs numeric alpha and beta") from exc
        grid = {"z": _floats(_need(grid, "z", task), "grid.z")}
    elif task in ("phi", "mean_inverse"):
        grid["t"] = _geomspace(_need(grid, "t", task), "grid.t")
        if task == "phi":
            grid["theta"] = _floats(_need(grid, "theta", task), "grid.theta")
        if any(t < 0 for t in grid["t"]) or any(th < 0 for th in grid.get("theta", [])):
            raise ConfigError("grid times and theta must be nonnegative")
    elif task in ("corr", "corr_asymptotic", "compare"):
        if "points" in grid:
            pts = [_floats(p, "grid.points entry") for p in grid["points"]]
            if not pts or any(len(p) != 2 for p in pts):
                raise ConfigError("grid.points must be a list of [t, s] pairs")
        else:
            ts = _geomspace(_need(grid, "t", task), "grid.t")
            ss = _floats(_need(grid, "s", task), "grid.s")
            pts = [[t, s] for s in ss for t in ts]
        if any(t < 0 or s < 0 for t, s in pts):
            raise ConfigError("grid times must be nonnegative")
        if task == "corr_asymptotic" and any(t <= 0 or s <= 0 for t, s in pts):
            raise ConfigError("corr_asymptotic needs positive t and s")
        grid = {"points": pts}
    elif task == "simulate":
        grid = {"t": sorted(_floats(_need(grid, "t", task), "grid.t"))}
    elif task == "density":
        grid = {"t": _floats(_need(grid, "t", task), "grid.t"),
                "x": _floats(_need(grid, "x", task), "grid.x"),
                "y": _floats(_need(grid, "y", task), "grid.y"),
                "N": int(grid.get("N", 30))}
        if any(t <= 0 for t in grid["t"]):
            raise ConfigError("density needs positive times")
    cfg["grid"] = grid

    if task in ("simulate", "compare"):
        s = dict(cfg.get("simulation") or {})
        cfg["simulation"] = {
            "n_paths": int(_need(s, "n_paths", task)),
            "dtau": float(s.get("dtau", 1e-3)),
            "horizon": float(s.get("horizon", 1.0)),
            "scheme": str(s.get("scheme", _default_scheme(cfg))),
        }
        _sim_config(cfg, [0.0])
    else:
        cfg.pop("simulation", None)

    if task == "corr_asymptotic":
        a = dict(cfg.get("asymptotic") or {})
        cfg["asymptotic"] = {"regime": str(a.get("regime", "fixed_s")),
                             "integral": str(a.get("integral", "laplace_inversion"))}
        if cfg["asymptotic"]["regime"] not in ("fixed_s", "large_s"):
            raise ConfigError("asymptotic.regime must be fixed_s or large_s")
    else:
        cfg.pop("asymptotic", None)

    pol = dict(cfg.get("policies") or {})
    cfg["policies"] = {
        "eval": {**_dc_dict(EvalPolicy()), **(pol.get("eval") or {})},
        "inversion": {**_dc_dict(InversionPolicy()), **(pol.get("inversion") or {})},
        "quadrature": {**_dc_dict(QuadraturePolicy()), **(pol.get("quadrature") or {})},
    }
    _policies(cfg)

    out = dict(cfg.get("output") or {})
    plots = list(out.get("plots") or [])
    bad = [p for p in plots if p not in PLOT_STYLES]
    if bad:
        raise ConfigError(f"unknown plot styles {bad}; choose from {PLOT_STYLES}")
    ens = out.get("ensemble", "csv" if task == "simulate" else "none")
    if ens not in ("none", "csv", "binary", "both"):
        raise ConfigError("output.ensemble must be none, csv, binary or both")
    cfg["output"] = {"dir": str(out.get("dir", ".")), "prefix": str(out.get("prefix", task)),
                     "plots": plots, "ensemble": ens}
    return cfg


def _dc_dict(obj):
    return {k: getattr(obj, k) for k in obj.__dataclass_fields__}


def _default_scheme(cfg):
    return "exact_ou" if classify(_model(cfg)) is PearsonClass.HERMITE else "euler_reflected"


def _mixture(cfg):
    m = cfg["mixture"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return StableMixture(m["orders"], m["weights"])


def _model(cfg):
    m = cfg["model"]
    model = PearsonModel(m["a0"], m["a1"], m["d0"], m["d1"], m["d2"])
    cls = classify(model)
    if cls is PearsonClass.UNSUPPORTED:
        raise ConfigError("model has no discrete spectrum (unsupported Pearson class)")
    if "class" in m and m["class"].lower() != cls.value.lower():
        raise ConfigError(f"model class {m['class']!r} does not match coefficients ({cls.value})")
    return model


def _sim_config(cfg, times):
    s = cfg["simulation"]
    return SimConfig(n_paths=s["n_paths"], observation_times=tuple(times), seed=cfg["seed"],
                     dtau=s["dtau"], horizon=s["horizon"], scheme=s["scheme"])


def _policies(cfg):
    p = cfg["policies"]
    try:
        return (EvalPolicy(**p["eval"]), InversionPolicy(**p["inversion"]),
                QuadraturePolicy(**p["quadrature"]))
    except TypeError as exc:
        raise ConfigError(f"bad policy field: {exc}") from exc


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------

@dataclass
class Results:
    """Tabular output of one task plus extra named text files."""

    task: str
    header: tuple
    rows: list
    config: dict
    files: dict = field(default_factory=dict)
    binary: dict = field(default_factory=dict)


def _workers():
    env = os.environ.get("FRACPEARSON_THREADS")
    return max(1, int(env)) if env else 1


def _pmap(fn, items):
    """Order-preserving map over a thread pool capped by ``FRACPEARSON_THREADS``."""
    n = _workers()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _corr_fn(mix):
    return corr_time_changed if mix.n == 2 else corr_time_changed_n


def _task_rows(cfg):
    task, grid = cfg["task"], cfg["grid"]
    ev, inv, quad = _policies(cfg)
    if task == "eval_gml":
        g = cfg["gml"]
        return [(z, gml(g["alpha"], g["beta"], g["gamma"], z, ev)) for z in grid["z"]]
    mix = _mixture(cfg)
    if task == "phi":
        return [(th, t, float(laplace_functional(mix, th, t)))
                for th in grid["theta"] for t in grid["t"]]
    if task == "mean_inverse":
        fn = mean_inverse if mix.n == 2 else (lambda m, t: mean_inverse_n(m, t, inv))
        return [(t, float(fn(mix, t))) for t in grid["t"]]
    model = _model(cfg)
    if task == "corr":
        f = _corr_fn(mix)
        vals = _pmap(lambda p: f(model, mix, p[0], p[1], quad), grid["points"])
        return [(t, s, v) for (t, s), v in zip(grid["points"], vals)]
    if task == "corr_asymptotic":
        a = cfg["asymptotic"]
        if mix.n == 2:
            vals = [corr_asymptotic(model, mix, t, s, a["regime"]) for t, s in grid["points"]]
        else:
            vals = [corr_asymptotic_n(model, mix, t, s, quad, a["integral"])
                    for t, s in grid["points"]]
        return [(t, s, v) for (t, s), v in zip(grid["points"], vals)]
    if task == "density":
        rows = []
        for t in grid["t"]:
            for y in grid["y"]:
                x = np.asarray(grid["x"])
                p = transition_density_time_changed(model, mix, x, t, y, grid["N"])
                rows.extend((t, y, xi, float(pi)) for xi, pi in zip(x, np.atleast_1d(p)))
        return rows
    raise AssertionError(task)


def _execute(cfg) -> Results:
    task = cfg["task"]
    if task in ("simulate", "compare"):
        return _execute_mc(cfg)
    return Results(task, HEADERS[task], _task_rows(cfg), cfg)


def _execute_mc(cfg):
    task = cfg["task"]
    mix, model = _mixture(cfg), _model(cfg)
    if task == "simulate":
        times = cfg["grid"]["t"]
    else:
        times = sorted({v for p in cfg["grid"]["points"] for v in p})
    ens = simulate_ensemble(model, mix, _sim_config(cfg, times))
    res = Results(task, HEADERS[task], [], cfg)
    if task == "compare":
        _, _, quad = _policies(cfg)
        f = _corr_fn(mix)
        pts = cfg["grid"]["points"]
        analytic = _pmap(lambda p: f(model, mix, p[0], p[1], quad), pts)
        for (t, s), a in zip(pts, analytic):
            r, se = empirical_corr(ens, t, s)
            z = (r - a) / se if se > 0 else 0.0
            res.rows.append((t, s, a, r, se, z))
    mode = cfg["output"]["ensemble"]
    prefix = cfg["output"]["prefix"]
    if task == "simulate":
        res.rows = [(i, ens.times[j], ens.E[i, j], ens.X[i, j])
                    for i in range(ens.n_paths) for j in range(ens.times.size)]
        if mode in ("binary", "both"):
            res.binary[f"{prefix}_ensemble.bin"] = _ensemble_bytes(ens)
    else:
        if mode in ("csv", "both"):
            buf = io.StringIO()
            _write_table(buf, HEADERS["simulate"],
                         [(i, ens.times[j], ens.E[i, j], ens.X[i, j])
                          for i in range(ens.n_paths) for j in range(ens.times.size)])
            res.files[f"{prefix}_ensemble.csv"] = buf.getvalue()
        if mode in ("binary", "both"):
            res.binary[f"{prefix}_ensemble.bin"] = _ensemble_bytes(ens)
    return res


def _ensemble_bytes(ens):
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "e.bin"
        ens.to_binary(p)
        return p.read_bytes()


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _write_table(fh, header, rows):
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def _table_text(header, rows, sep=","):
    return "".join([sep.join(header) + "\n"] +
                   [sep.join(_fmt(v) for v in row) + "\n" for row in rows])


def emit_plot_data(results: Results, style: str, out_dir=None) -> dict:
    """Plain-text tables for plotting; returns ``{filename: text}``.

    ``loglog_corr`` needs corr/compare results and also writes the fitted
    log-log slope next to the reference ``-beta_1``.  ``phi_decay`` needs phi
    results, ``density_heatmap`` density results.  When ``out_dir`` is given
    the files are written there as well.
    """
    cfg, prefix = results.config, results.config["output"]["prefix"]
    files = {}
    if style == "loglog_corr":
        if results.task not in ("corr", "compare", "corr_asymptotic"):
            raise ConfigError("loglog_corr needs a corr, compare or corr_asymptotic task")
        rows = sorted((r[0], r[1], r[2]) for r in results.rows)
        files[f"{prefix}_loglog_corr.dat"] = _table_text(("t", "s", "corr"), rows, " ")
        lines = ["s slope intercept r_squared reference_slope\n"]
        b1 = _mixture(cfg).active()[1][0]
        for s in sorted({r[1] for r in rows}):
            pts = [(t, c) for t, ss, c in rows if ss == s and t > s and c > 0]
            if len(pts) < 2:
                continue
            x = np.log([p[0] for p in pts])
            y = np.log([p[1] for p in pts])
            slope, icept = np.polyfit(x, y, 1)
            resid = y - (slope * x + icept)
            tot = float(np.sum((y - y.mean()) ** 2))
            r2 = 1.0 - float(np.sum(resid ** 2)) / tot if tot > 0 else 1.0
            lines.append(" ".join(_fmt(v) for v in (s, slope, icept, r2, -b1)) + "\n")
        files[f"{prefix}_loglog_slope.txt"] = "".join(lines)
    elif style == "phi_decay":
        if results.task != "phi":
            raise ConfigError("phi_decay needs a phi task")
        for th in sorted({r[0] for r in results.rows}):
            rows = sorted((r[1], r[2]) for r in results.rows if r[0] == th)
            files[f"{prefix}_phi_decay_theta{_fmt(th)}.dat"] = _table_text(("t", "phi"), rows, " ")
    elif style == "density_heatmap":
        if results.task != "density":
            raise ConfigError("density_heatmap needs a density task")
        for t in sorted({r[0] for r in results.rows}):
            rows = sorted((r[2], r[1], r[3]) for r in results.rows if r[0] == t)
            files[f"{prefix}_density_t{_fmt(t)}.dat"] = _table_text(("x", "y", "density"), rows, " ")
    else:
        raise ConfigError(f"unknown plot style {style!r}")
    if out_dir is not None:
        for name, text in files.items():
            (Path(out_dir) / name).write_text(text, encoding="utf-8", newline="\n")
    return files


def _versions():
    import mpmath
    import scipy
    return {"fracpearson": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "mpmath": mpmath.__version__}


def run(config, out_dir=None) -> dict:
    """Validate, compute and write all outputs; returns the manifest.

    ``config`` is a path or a mapping; ``out_dir`` overrides ``output.dir``.
    """
    raw = load_config(config) if isinstance(config, (str, Path)) else config
    cfg = resolve_config(raw)
    if out_dir is not None:
        cfg["output"]["dir"] = str(out_dir)
    start = time.perf_counter()
    res = _execute(cfg)
    prefix = cfg["output"]["prefix"]
    texts = {f"{prefix}.csv": _table_text(res.header, res.rows)}
    texts.update(res.files)
    for style in cfg["output"]["plots"]:
        texts.update(emit_plot_data(res, style))
    blobs = {k: v.encode("utf-8") for k, v in texts.items()}
    blobs.update(res.binary)
    manifest = {
        "manifest_version": SCHEMA_VERSION,
        "csv_schema": {"version": SCHEMA_VERSION, "columns": list(res.header)},
        "config": cfg,
        "seed": cfg["seed"],
        "versions": _versions(),
        "threads": _workers(),
        "wall_time_s": time.perf_counter() - start,
        "outputs": {k: hashlib.sha256(v).hexdigest() for k, v in sorted(blobs.items())},
    }
    blobs[f"{prefix}_manifest.json"] = (json.dumps(manifest, indent=2, sort_keys=True)
                                        + "\n").encode("utf-8")
    target = Path(cfg["output"]["dir"])
    target.mkdir(parents=True, exist_ok=True)
    for name, data in blobs.items():
        (target / name).write_bytes(data)
    return manifest


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="fracpearson",
                                description="Time-changed Pearson diffusion experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run the task named in the config"),
                       ("validate", "check a config without computing"),
                       ("compare", "analytic vs Monte Carlo correlation")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config")
        if name != "validate":
            sp.add_argument("-o", "--out-dir", default=None, help="override output.dir")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        if args.command == "compare":
            raw = {**raw, "task": "compare"}
        if args.command == "validate":
            cfg = resolve_config(raw)
            print(f"ok: task {cfg['task']}")
            return EXIT_OK
        manifest = run(raw, args.out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FracPearsonError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for name in manifest["outputs"]:
        print(name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

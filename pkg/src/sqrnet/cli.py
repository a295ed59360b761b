"""Command-line harness: simulate, train, bench, cv, rate, landscape, losscurves.

Every command takes an optional JSON config file plus flags that mirror
the config keys; flags win. Each artifact embeds the fully resolved
config (as a leading ``# config:`` comment in CSVs, as a ``config`` field
in JSON documents), and volatile metadata such as timestamps lives in a
``<artifact>.meta.json`` sidecar so re-runs with the same config and
seeds produce byte-identical CSV bodies.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from .distributions import NoiseLaw
from .evaluation import (
    METHODS,
    TrialSpec,
    rate_fit,
    run_csv_trials,
    run_trials,
)
from .landscape import LandscapeSpec, random_direction, surface, write_surface_csv
from .losses import KERNELS, LossSpec, pinball_loss, smoothed_loss
from .network import Architecture
from .rng import Rng
from .scenarios import generate, get_scenario, load_csv, split, standardize_columns
from .trainer import (
    DEFAULT_BANDWIDTH_GRID,
    FittedQuantileModel,
    TrainConfig,
    cv_bandwidth,
    train_noncrossing,
    train_single,
)

DEFAULT_TAUS = (0.05, 0.25, 0.5, 0.75, 0.95)
DEFAULT_H_BY_N = {1000: 0.01, 5000: 0.005, 10000: 0.001}
DETERMINISTIC_ENV = "SQRNET_DETERMINISTIC"

_TRAIN_KEYS = (
    "batch_size", "max_epochs", "learning_rate", "momentum", "nesterov",
    "scheduler_factor", "scheduler_patience", "early_stop", "lr_threshold",
    "stop_patience", "val_fraction", "shared_trunk", "restore_best",
)


class CliError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _deterministic_default() -> bool:
    return os.environ.get(DETERMINISTIC_ENV, "1") != "0"


def _resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise CliError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise CliError(f"config file is not valid JSON: {exc}")
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise CliError(f"unknown config keys: {unknown}")
        resolved.update(file_cfg)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _validate(problems: list[str]) -> None:
    if problems:
        raise CliError("; ".join(problems))


def _train_config(cfg: dict) -> TrainConfig:
    kwargs = {k: cfg[k] for k in _TRAIN_KEYS if cfg.get(k) is not None}
    kwargs["deterministic"] = cfg.get("deterministic", _deterministic_default())
    return TrainConfig(**kwargs)


def _architecture(cfg: dict, input_dim: int, n_outputs: int = 1) -> Architecture:
    model = cfg.get("model", "A")
    residual = bool(cfg.get("residual", False))
    if model == "custom":
        widths = cfg.get("widths")
        if not widths:
            raise CliError("model=custom requires non-empty widths")
        return Architecture(input_dim, tuple(int(w) for w in widths),
                            n_outputs, residual)
    return Architecture.preset(model, input_dim, n_outputs, residual)


def _data_source_problems(cfg: dict) -> list[str]:
    problems = []
    has_scenario = bool(cfg.get("scenario"))
    has_csv = bool(cfg.get("csv"))
    if has_scenario == has_csv:
        problems.append("exactly one data source required: scenario or csv")
    if has_csv:
        if not cfg.get("features"):
            problems.append("csv source requires feature column names")
        if not cfg.get("target"):
            problems.append("csv source requires a target column")
    return problems


def _load_csv_source(cfg: dict):
    return load_csv(cfg["csv"], list(cfg["features"]), cfg["target"],
                    cfg.get("row_filter"))


def _default_bandwidth(n: int) -> float:
    if n not in DEFAULT_H_BY_N:
        raise CliError(
            f"no default bandwidth for n={n}; pass h explicitly or use cv "
            f"(defaults exist for n in {sorted(DEFAULT_H_BY_N)})"
        )
    return DEFAULT_H_BY_N[n]


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)  # numpy scalars repr as np.float64(...) otherwise
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _write_csv(path, config: dict, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_meta(path, command: str, config: dict) -> None:
    meta = {
        "command": command,
        "config": config,
        "created_unix": time.time(),
    }
    with open(str(path) + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _write_json(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def _history_rows(fitted: FittedQuantileModel) -> list[list]:
    return [[r.epoch, r.train_loss, r.val_loss, r.lr] for r in fitted.history]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    defaults = {"scenario": "S1", "n": 1000, "seed": 0, "out": "data.csv"}
    cfg = _resolve_config(args, defaults)
    problems = []
    if cfg["n"] < 1:
        problems.append(f"n must be positive, got {cfg['n']}")
    _validate(problems)
    scenario = get_scenario(cfg["scenario"])
    ds = generate(scenario, int(cfg["n"]), Rng(int(cfg["seed"])))
    header = [f"x{j + 1}" for j in range(ds.dim)] + ["y"]
    rows = [[*ds.X[i], ds.y[i]] for i in range(ds.n)]
    _write_csv(cfg["out"], cfg, header, rows)
    _write_meta(cfg["out"], "simulate", cfg)
    print(f"wrote {ds.n} rows to {cfg['out']}")
    return 0


def _train_defaults() -> dict:
    d = {
        "scenario": None, "csv": None, "features": None, "target": None,
        "row_filter": None, "standardize": None,
        "n": 1000, "seed": 0, "taus": [0.5], "method": "gaussian", "h": None,
        "model": "A", "widths": None, "residual": False,
        "out_model": "model.json", "out_history": None,
    }
    d.update({k: None for k in _TRAIN_KEYS})
    return d


def _prepare_training_inputs(cfg: dict):
    """Shared by train and landscape: dataset + arch + loss specs."""
    problems = _data_source_problems(cfg)
    taus = [float(t) for t in cfg["taus"]]
    if any(not 0 < t < 1 for t in taus):
        problems.append(f"quantile levels must lie in (0,1): {taus}")
    if sorted(set(taus)) != taus:
        problems.append(f"quantile levels must be strictly increasing: {taus}")
    method = cfg["method"]
    if method not in METHODS:
        problems.append(f"method must be one of {METHODS}, got {method!r}")
    if method == "baseline" and cfg.get("h") is not None:
        problems.append("method=baseline forbids h")
    _validate(problems)

    if cfg.get("scenario"):
        scenario = get_scenario(cfg["scenario"])
        dataset = generate(scenario, int(cfg["n"]), Rng(int(cfg["seed"])).split(100))
        standardize = bool(cfg.get("standardize") or False)
    else:
        dataset = _load_csv_source(cfg)
        standardize = cfg.get("standardize")
        standardize = True if standardize is None else bool(standardize)

    h = cfg.get("h")
    if method != "baseline" and h is None:
        h = _default_bandwidth(int(cfg["n"]))
    if method == "baseline":
        specs = tuple(LossSpec.pinball(t) for t in taus)
    else:
        specs = tuple(LossSpec.smoothed(t, method, float(h)) for t in taus)
    arch = _architecture(cfg, dataset.dim, n_outputs=len(taus))
    return dataset, standardize, arch, taus, specs, h


def cmd_train(args) -> int:
    cfg = _resolve_config(args, _train_defaults())
    dataset, standardize, arch, taus, specs, h = _prepare_training_inputs(cfg)
    cfg["h"] = h
    config = _train_config(cfg)
    if standardize:
        X_std, shift = standardize_columns(dataset.X)
        dataset = type(dataset)(X_std, dataset.y, dict(dataset.provenance))
        cfg["feature_mean"] = shift[0].tolist()
        cfg["feature_std"] = shift[1].tolist()
    seed = int(cfg["seed"])
    if len(taus) == 1:
        fitted = train_single(dataset, arch, specs[0], config, seed)
    else:
        fitted = train_noncrossing(dataset, arch, taus, specs, config, seed)

    doc = fitted.to_json()
    doc["config"] = cfg
    _write_json(cfg["out_model"], doc)
    _write_meta(cfg["out_model"], "train", cfg)
    if cfg.get("out_history"):
        _write_csv(cfg["out_history"], cfg, ["epoch", "train_loss", "val_loss", "lr"],
                   _history_rows(fitted))
        _write_meta(cfg["out_history"], "train", cfg)
    last = fitted.history[-1]
    print(f"trained {fitted.epochs_run} epochs; final val loss {last.val_loss:.6g}; "
          f"model saved to {cfg['out_model']}")
    return 0


def cmd_bench(args) -> int:
    defaults = {
        "scenario": None, "csv": None, "features": None, "target": None,
        "row_filter": None, "standardize": None, "test_fraction": 0.2,
        "model": "A", "widths": None, "residual": False,
        "taus": list(DEFAULT_TAUS), "methods": list(METHODS), "h": None,
        "n": 1000, "n_trials": 5, "n_test": 10000, "base_seed": 0,
        "workers": 1, "out_prefix": "bench",
    }
    defaults.update({k: None for k in _TRAIN_KEYS})
    cfg = _resolve_config(args, defaults)

    problems = _data_source_problems(cfg)
    for m in cfg["methods"]:
        if m not in METHODS:
            problems.append(f"unknown method {m!r}")
    taus = [float(t) for t in cfg["taus"]]
    if any(not 0 < t < 1 for t in taus):
        problems.append(f"quantile levels must lie in (0,1): {taus}")
    if cfg["n_trials"] < 1:
        problems.append(f"n_trials must be positive, got {cfg['n_trials']}")
    _validate(problems)

    smoothed_methods = [m for m in cfg["methods"] if m != "baseline"]
    h = cfg.get("h")
    if smoothed_methods and h is None:
        h = _default_bandwidth(int(cfg["n"]))
        cfg["h"] = h

    config = _train_config(cfg)
    # The baseline in the reference protocol trains all epochs unless the
    # caller explicitly set early_stop.
    baseline_config = (config if cfg.get("early_stop") is not None
                       else TrainConfig(**{**asdict(config), "early_stop": False}))

    csv_source = bool(cfg.get("csv"))
    if csv_source:
        dataset = _load_csv_source(cfg)
        input_dim = dataset.dim
    else:
        input_dim = get_scenario(cfg["scenario"]).dim
    arch = _architecture(cfg, input_dim)

    rows, cells = [], []
    model_label = cfg["model"] if cfg["model"] != "custom" else \
        "custom(" + "-".join(str(w) for w in cfg["widths"]) + ")"
    for method in cfg["methods"]:
        method_h = None if method == "baseline" else float(h)
        method_config = baseline_config if method == "baseline" else config
        for tau in taus:
            if csv_source:
                report = run_csv_trials(
                    dataset, arch, tau, method, method_h, method_config,
                    int(cfg["n_trials"]), int(cfg["base_seed"]),
                    test_fraction=float(cfg["test_fraction"]),
                    standardize=(True if cfg.get("standardize") is None
                                 else bool(cfg["standardize"])),
                )
            else:
                spec = TrialSpec(cfg["scenario"], arch, tau, method, method_h,
                                 int(cfg["n"]), int(cfg["n_test"]), method_config)
                report = run_trials(spec, int(cfg["n_trials"]),
                                    int(cfg["base_seed"]), int(cfg["workers"]))
            for r in report.records:
                rows.append([cfg.get("scenario") or cfg.get("csv"), model_label,
                             method, tau, cfg["n"] if not csv_source else len(dataset.y),
                             method_h if method_h is not None else "",
                             r.trial, r.base_seed, r.mse, r.mae, r.pinball,
                             r.epochs_run])
            cells.append({
                "scenario": cfg.get("scenario"),
                "csv": cfg.get("csv"),
                "model": model_label,
                "method": method,
                "tau": tau,
                "h": method_h,
                "n": int(cfg["n"]) if not csv_source else len(dataset.y),
                "aggregates": report.aggregates(),
                "records": [asdict(r) for r in report.records],
            })

    trials_path = cfg["out_prefix"] + "_trials.csv"
    agg_path = cfg["out_prefix"] + "_aggregate.json"
    header = ["source", "model", "method", "tau", "n", "h", "trial", "base_seed",
              "mse", "mae", "pinball", "epochs_run"]
    _write_csv(trials_path, cfg, header, rows)
    _write_meta(trials_path, "bench", cfg)
    _write_json(agg_path, {
        "format": "sqrnet.bench", "version": 1, "config": cfg, "cells": cells,
        "metadata": {"created_unix": time.time()},
    })
    print(f"wrote {trials_path} and {agg_path} ({len(cells)} cells)")
    return 0


def cmd_cv(args) -> int:
    defaults = {
        "scenario": None, "csv": None, "features": None, "target": None,
        "row_filter": None, "standardize": None,
        "model": "A", "widths": None, "residual": False,
        "tau": 0.5, "kernel": "gaussian", "candidates": list(DEFAULT_BANDWIDTH_GRID),
        "folds": 5, "n": 1000, "seed": 0, "out": "cv.json",
    }
    defaults.update({k: None for k in _TRAIN_KEYS})
    cfg = _resolve_config(args, defaults)
    problems = _data_source_problems(cfg)
    if cfg["kernel"] not in KERNELS:
        problems.append(f"kernel must be one of {KERNELS}, got {cfg['kernel']!r}")
    if not cfg["candidates"]:
        problems.append("candidate bandwidth list is empty")
    if cfg["folds"] < 2:
        problems.append(f"folds must be >= 2, got {cfg['folds']}")
    _validate(problems)

    if cfg.get("scenario"):
        scenario = get_scenario(cfg["scenario"])
        dataset = generate(scenario, int(cfg["n"]), Rng(int(cfg["seed"])).split(100))
    else:
        dataset = _load_csv_source(cfg)
        if cfg.get("standardize") is None or cfg["standardize"]:
            X_std, _ = standardize_columns(dataset.X)
            dataset = type(dataset)(X_std, dataset.y, dict(dataset.provenance))
    arch = _architecture(cfg, dataset.dim)
    config = _train_config(cfg)
    best, scores = cv_bandwidth(dataset, arch, float(cfg["tau"]), cfg["kernel"],
                                [float(c) for c in cfg["candidates"]],
                                int(cfg["folds"]), config, int(cfg["seed"]))
    _write_json(cfg["out"], {
        "format": "sqrnet.cv", "version": 1, "config": cfg,
        "selected_h": best,
        "scores": [{"h": h, "mean_pinball": s} for h, s in sorted(scores.items())],
        "metadata": {"created_unix": time.time()},
    })
    print(f"selected h={best:g}; scores written to {cfg['out']}")
    return 0


def cmd_rate(args) -> int:
    defaults = {
        "scenario": "S2", "model": "A", "widths": None, "residual": False,
        "tau": 0.5, "method": "gaussian", "h": None,
        "n_grid": [1000, 3000, 5000, 7000, 10000],
        "n_trials": 5, "n_test": 10000, "base_seed": 0, "workers": 1,
        "out": "rate.json", "inject_mse": None,
    }
    defaults.update({k: None for k in _TRAIN_KEYS})
    cfg = _resolve_config(args, defaults)
    problems = []
    if cfg["method"] not in METHODS:
        problems.append(f"method must be one of {METHODS}, got {cfg['method']!r}")
    if len(cfg["n_grid"]) < 2:
        problems.append("n_grid needs at least two sample sizes")
    if cfg["method"] == "baseline" and cfg.get("h") is not None:
        problems.append("method=baseline forbids h")
    if cfg["method"] != "baseline" and cfg.get("h") is None:
        cfg["h"] = 0.1  # the rate protocol's fixed kernel scale
    _validate(problems)

    points = []
    if cfg["inject_mse"]:
        # Test hook: skip training and take the per-n errors as given.
        injected = {int(k): float(v) for k, v in cfg["inject_mse"].items()}
        missing = [n for n in cfg["n_grid"] if n not in injected]
        if missing:
            raise CliError(f"inject_mse lacks sample sizes {missing}")
        for n in cfg["n_grid"]:
            points.append({"n": int(n), "mse_mean": injected[n], "mse_stderr": 0.0})
    else:
        arch = _architecture(cfg, get_scenario(cfg["scenario"]).dim)
        config = _train_config(cfg)
        h = None if cfg["method"] == "baseline" else float(cfg["h"])
        for n in cfg["n_grid"]:
            spec = TrialSpec(cfg["scenario"], arch, float(cfg["tau"]), cfg["method"],
                             h, int(n), int(cfg["n_test"]), config)
            report = run_trials(spec, int(cfg["n_trials"]), int(cfg["base_seed"]),
                                int(cfg["workers"]))
            agg = report.aggregate("mse")
            points.append({"n": int(n), "mse_mean": agg.mean, "mse_stderr": agg.stderr})

    fit = rate_fit([(p["n"], p["mse_mean"]) for p in points])
    _write_json(cfg["out"], {
        "format": "sqrnet.rate", "version": 1, "config": cfg, "points": points,
        "fit": {"slope": fit.slope, "intercept": fit.intercept,
                "r_squared": fit.r_squared},
        "metadata": {"created_unix": time.time()},
    })
    print(f"rate fit slope {fit.slope:.4f} (R^2 {fit.r_squared:.4f}) "
          f"written to {cfg['out']}")
    return 0


def cmd_landscape(args) -> int:
    defaults = _train_defaults()
    defaults.update({
        "model": "landscape", "model_file": None,
        "resolution": 51, "alpha_min": -1.0, "alpha_max": 1.0,
        "beta_min": -1.0, "beta_max": 1.0, "direction_seed": 0,
        "include_biases": True, "out": "landscape.csv",
    })
    cfg = _resolve_config(args, defaults)

    dataset, standardize, arch, taus, specs, h = _prepare_training_inputs(cfg)
    cfg["h"] = h
    if len(taus) != 1:
        raise CliError("landscape needs exactly one quantile level")
    if standardize:
        X_std, _ = standardize_columns(dataset.X)
        dataset = type(dataset)(X_std, dataset.y, dict(dataset.provenance))

    if cfg.get("model_file"):
        with open(cfg["model_file"], encoding="utf-8") as fh:
            fitted = FittedQuantileModel.from_json(json.load(fh))
        if fitted.noncrossing or len(fitted.networks) != 1:
            raise CliError("landscape requires a single-quantile model file")
        model = fitted.networks[0]
    else:
        config = _train_config(cfg)
        model = train_single(dataset, arch, specs[0], config, int(cfg["seed"])).networks[0]

    spec = LandscapeSpec(
        dataset=dataset, loss_spec=specs[0], resolution=int(cfg["resolution"]),
        alpha_range=(float(cfg["alpha_min"]), float(cfg["alpha_max"])),
        beta_range=(float(cfg["beta_min"]), float(cfg["beta_max"])),
        direction_seed=int(cfg["direction_seed"]),
        include_biases=bool(cfg["include_biases"]),
    )
    dir_rng = Rng(spec.direction_seed)
    d1 = random_direction(model, dir_rng.split(0), spec.include_biases)
    d2 = random_direction(model, dir_rng.split(1), spec.include_biases)
    alphas, betas, grid = surface(model, d1, d2, spec)
    write_surface_csv(cfg["out"], alphas, betas, grid,
                      header_comment="config: " + json.dumps(cfg, sort_keys=True))
    _write_meta(cfg["out"], "landscape", cfg)
    print(f"wrote {spec.resolution}x{spec.resolution} loss surface to {cfg['out']}")
    return 0


def cmd_losscurves(args) -> int:
    defaults = {
        "tau": 0.5, "kernel": "gaussian", "h_list": [0.4, 0.2, 0.1],
        "u_min": -1.0, "u_max": 1.0, "points": 401, "out": "losscurves.csv",
    }
    cfg = _resolve_config(args, defaults)
    problems = []
    if cfg["kernel"] not in KERNELS:
        problems.append(f"kernel must be one of {KERNELS}, got {cfg['kernel']!r}")
    if not cfg["h_list"]:
        problems.append("h_list is empty")
    if cfg["points"] < 2:
        problems.append("points must be >= 2")
    _validate(problems)
    tau = float(cfg["tau"])
    u = np.linspace(float(cfg["u_min"]), float(cfg["u_max"]), int(cfg["points"]))
    header = ["u", "pinball"] + [f"smoothed_h{h:g}" for h in cfg["h_list"]]
    columns = [u, pinball_loss(u, tau)]
    for h in cfg["h_list"]:
        columns.append(smoothed_loss(u, LossSpec.smoothed(tau, cfg["kernel"], float(h))))
    rows = [[col[i] for col in columns] for i in range(u.size)]
    _write_csv(cfg["out"], cfg, header, rows)
    _write_meta(cfg["out"], "losscurves", cfg)
    print(f"wrote {u.size} loss-curve rows to {cfg['out']}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--scheduler-factor", dest="scheduler_factor", type=float)
    p.add_argument("--scheduler-patience", dest="scheduler_patience", type=int)
    p.add_argument("--early-stop", dest="early_stop", type=_parse_bool)
    p.add_argument("--lr-threshold", dest="lr_threshold", type=float)
    p.add_argument("--stop-patience", dest="stop_patience", type=int)
    p.add_argument("--val-fraction", dest="val_fraction", type=float)
    p.add_argument("--shared-trunk", dest="shared_trunk", type=_parse_bool)
    p.add_argument("--restore-best", dest="restore_best", type=_parse_bool)


def _add_source_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=("S1", "S2", "S3"))
    p.add_argument("--csv")
    p.add_argument("--features", nargs="+")
    p.add_argument("--target")
    p.add_argument("--row-filter", dest="row_filter")
    p.add_argument("--standardize", type=_parse_bool)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=("A", "B", "landscape", "custom"))
    p.add_argument("--widths", nargs="+", type=int)
    p.add_argument("--residual", type=_parse_bool)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_inject(text: str) -> dict:
    out = {}
    for part in text.split(","):
        n, _, v = part.partition("=")
        out[n.strip()] = float(v)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqrnet",
        description="Smoothed-quantile network benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit a scenario dataset as CSV")
    _add_common(p)
    p.add_argument("--scenario", choices=("S1", "S2", "S3"))
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train one model, save model + history")
    _add_common(p)
    _add_source_flags(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--taus", nargs="+", type=float)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--h", type=float)
    p.add_argument("--out-model", dest="out_model")
    p.add_argument("--out-history", dest="out_history")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="repeated-trial benchmark over a method/tau grid")
    _add_common(p)
    _add_source_flags(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--taus", nargs="+", type=float)
    p.add_argument("--methods", nargs="+", choices=METHODS)
    p.add_argument("--h", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--n-trials", dest="n_trials", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--out-prefix", dest="out_prefix")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("cv", help="K-fold bandwidth selection")
    _add_common(p)
    _add_source_flags(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--kernel", choices=KERNELS)
    p.add_argument("--candidates", nargs="+", type=float)
    p.add_argument("--folds", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("rate", help="benchmark over an n-grid and fit log-log slope")
    _add_common(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--scenario", choices=("S1", "S2", "S3"))
    p.add_argument("--tau", type=float)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--h", type=float)
    p.add_argument("--n-grid", dest="n_grid", nargs="+", type=int)
    p.add_argument("--n-trials", dest="n_trials", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--inject-mse", dest="inject_mse", type=_parse_inject,
                   help="test mode: n=mse[,n=mse...], skips training")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("landscape", help="two-direction loss surface of a model")
    _add_common(p)
    _add_source_flags(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--taus", nargs="+", type=float)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--h", type=float)
    p.add_argument("--model-file", dest="model_file")
    p.add_argument("--resolution", type=int)
    p.add_argument("--alpha-min", dest="alpha_min", type=float)
    p.add_argument("--alpha-max", dest="alpha_max", type=float)
    p.add_argument("--beta-min", dest="beta_min", type=float)
    p.add_argument("--beta-max", dest="beta_max", type=float)
    p.add_argument("--direction-seed", dest="direction_seed", type=int)
    p.add_argument("--include-biases", dest="include_biases", type=_parse_bool)
    p.add_argument("--out")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("losscurves", help="check loss vs smoothed loss curves as CSV")
    _add_common(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--kernel", choices=KERNELS)
    p.add_argument("--h-list", dest="h_list", nargs="+", type=float)
    p.add_argument("--u-min", dest="u_min", type=float)
    p.add_argument("--u-max", dest="u_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_losscurves)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected failure path
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark metrics, the repeated-trial protocol, and the log-log rate fit.

One *trial* generates fresh training data, trains a model, and scores it
on a fresh test set against the scenario's analytic quantile. Trials are
seeded through split streams of a base seed, so any trial can be re-run
in isolation and methods sharing a base seed see identical data. Wall
time is measured around training only.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .losses import LossSpec, pinball_loss
from .network import Architecture
from .rng import Rng
from .scenarios import (
    Dataset,
    Scenario,
    generate,
    get_scenario,
    split,
    standardize_columns,
    true_quantile,
)
from .trainer import TrainConfig, train_single

METHODS = ("baseline", "gaussian", "uniform", "epanechnikov")

REPORT_FORMAT = "sqrnet.trial_report"
REPORT_VERSION = 1


def mse(pred, truth) -> float:
    """Mean squared error."""
    pred, truth = _paired(pred, truth)
    diff = pred - truth
    return float(np.mean(diff * diff))


def mae(pred, truth) -> float:
    """Mean absolute error."""
    pred, truth = _paired(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def pinball_risk(pred, y, tau: float) -> float:
    """Mean check loss of the residuals y - pred."""
    pred, y = _paired(pred, y)
    return float(np.mean(pinball_loss(y - pred, tau)))


def _paired(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("need at least one element")
    return a, b


@dataclass(frozen=True)
class TrialSpec:
    """Everything that defines one benchmark cell."""

    scenario_id: str
    arch: Architecture
    tau: float
    method: str  # baseline | gaussian | uniform | epanechnikov
    bandwidth: float | None
    n: int
    n_test: int
    config: TrainConfig

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.method == "baseline":
            if self.bandwidth is not None:
                raise ValueError("baseline takes no bandwidth")
        elif self.bandwidth is None or self.bandwidth <= 0:
            raise ValueError(f"method {self.method} needs a positive bandwidth")
        if self.n < 1 or self.n_test < 1:
            raise ValueError("n and n_test must be positive")

    @property
    def loss_spec(self) -> LossSpec:
        if self.method == "baseline":
            return LossSpec.pinball(self.tau)
        return LossSpec.smoothed(self.tau, self.method, self.bandwidth)

    def scenario(self) -> Scenario:
        return get_scenario(self.scenario_id)

    def describe(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "arch": {
                "input_dim": self.arch.input_dim,
                "hidden_widths": list(self.arch.hidden_widths),
                "n_outputs": self.arch.n_outputs,
                "residual": self.arch.residual,
            },
            "tau": self.tau,
            "method": self.method,
            "bandwidth": self.bandwidth,
            "n": self.n,
            "n_test": self.n_test,
            "config": asdict(self.config),
        }


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    base_seed: int
    mse: float
    mae: float
    pinball: float
    train_seconds: float
    epochs_run: int


@dataclass
class Aggregate:
    mean: float
    stderr: float


@dataclass
class TrialReport:
    spec: dict
    base_seed: int
    records: list[TrialRecord]

    def aggregate(self, metric: str) -> Aggregate:
        # Sorting first makes the reduction bitwise permutation-invariant.
        values = np.sort(np.array([getattr(r, metric) for r in self.records],
                                  dtype=float))
        mean = float(values.mean())
        stderr = 0.0 if values.size < 2 else float(values.std(ddof=1) / math.sqrt(values.size))
        return Aggregate(mean, stderr)

    def aggregates(self) -> dict[str, dict[str, float]]:
        return {
            m: asdict(self.aggregate(m))
            for m in ("mse", "mae", "pinball", "train_seconds", "epochs_run")
        }

    def to_json(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "spec": self.spec,
            "base_seed": self.base_seed,
            "records": [asdict(r) for r in self.records],
            "aggregates": self.aggregates(),
        }

    @staticmethod
    def from_json(doc: dict) -> "TrialReport":
        if doc.get("format") != REPORT_FORMAT:
            raise ValueError(f"not a {REPORT_FORMAT} document")
        records = [TrialRecord(**r) for r in doc["records"]]
        return TrialReport(doc["spec"], doc["base_seed"], records)


def run_single_trial(spec: TrialSpec, base_seed: int, trial: int) -> TrialRecord:
    """Generate data, train, and score one trial.

    Stream layout: trial t draws training data from split(t).split(0),
    the test set from split(t).split(1), and init/shuffle streams from
    split(t).split(2). None of these depend on the method, so baseline
    and smoothed runs with one base seed see identical data.
    """
    scenario = spec.scenario()
    trial_rng = Rng(base_seed).split(trial)
    train_ds = generate(scenario, spec.n, trial_rng.split(0))
    test_ds = generate(scenario, spec.n_test, trial_rng.split(1))
    truth = true_quantile(scenario, test_ds.X, spec.tau)

    t0 = time.perf_counter()
    fitted = train_single(train_ds, spec.arch, spec.loss_spec, spec.config,
                          trial_rng.split(2))
    seconds = time.perf_counter() - t0

    pred = fitted.predict(test_ds.X)
    return TrialRecord(
        trial=trial,
        base_seed=base_seed,
        mse=mse(pred, truth),
        mae=mae(pred, truth),
        pinball=pinball_risk(pred, test_ds.y, spec.tau),
        train_seconds=round(seconds, 3),
        epochs_run=fitted.epochs_run,
    )


def run_trials(spec: TrialSpec, n_trials: int, base_seed: int,
               n_workers: int = 1) -> TrialReport:
    """Run ``n_trials`` independent trials and aggregate.

    Workers map to whole trials; records are merged in trial order, so the
    report is identical whatever the worker count.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be positive, got {n_trials}")
    indices = list(range(n_trials))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(_trial_worker,
                                    [(spec, base_seed, t) for t in indices]))
    else:
        records = [run_single_trial(spec, base_seed, t) for t in indices]
    records.sort(key=lambda r: r.trial)
    return TrialReport(spec.describe(), base_seed, records)


def _trial_worker(args) -> TrialRecord:
    return run_single_trial(*args)


def run_csv_trials(dataset: Dataset, arch: Architecture, tau: float, method: str,
                   bandwidth: "float | None", config: TrainConfig, n_trials: int,
                   base_seed: int, test_fraction: float = 0.2,
                   standardize: bool = True) -> TrialReport:
    """Real-data protocol: per trial, re-split, train, score held-out check loss.

    There is no quantile oracle for file-backed data, so the mse/mae
    fields are NaN and the check-loss risk carries the comparison.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be positive, got {n_trials}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if method == "baseline":
        loss_spec = LossSpec.pinball(tau)
    else:
        loss_spec = LossSpec.smoothed(tau, method, bandwidth)
    records = []
    for trial in range(n_trials):
        trial_rng = Rng(base_seed).split(trial)
        parts = split(dataset, {"test": test_fraction}, trial_rng.split(0))
        train_X, test_X = dataset.X[parts["train"]], dataset.X[parts["test"]]
        if standardize:
            train_X, test_X, _ = standardize_columns(train_X, test_X)
        train_ds = Dataset(train_X, dataset.y[parts["train"]], dict(dataset.provenance))
        t0 = time.perf_counter()
        fitted = train_single(train_ds, arch, loss_spec, config, trial_rng.split(2))
        seconds = time.perf_counter() - t0
        pred = fitted.predict(test_X)
        records.append(TrialRecord(
            trial=trial,
            base_seed=base_seed,
            mse=math.nan,
            mae=math.nan,
            pinball=pinball_risk(pred, dataset.y[parts["test"]], tau),
            train_seconds=round(seconds, 3),
            epochs_run=fitted.epochs_run,
        ))
    spec = {
        "source": dataset.provenance,
        "arch": {
            "input_dim": arch.input_dim,
            "hidden_widths": list(arch.hidden_widths),
            "n_outputs": arch.n_outputs,
            "residual": arch.residual,
        },
        "tau": tau,
        "method": method,
        "bandwidth": bandwidth,
        "test_fraction": test_fraction,
        "standardize": standardize,
        "config": asdict(config),
    }
    return TrialReport(spec, base_seed, records)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


def rate_fit(points) -> RateFit:
    """Ordinary least squares of log(mse) on log(n).

    ``points`` is a sequence of (n, mse) pairs with at least two distinct
    sample sizes and strictly positive errors.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len({n for n, _ in pts}) < 2:
        raise ValueError("need at least two distinct sample sizes")
    if any(v <= 0 for _, v in pts):
        raise ValueError("mse values must be strictly positive")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    xbar, ybar = x.mean(), y.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - ybar)) / sxx)
    intercept = float(ybar - slope * xbar)
    residuals = y - (intercept + slope * x)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - ybar) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope, intercept, r2)

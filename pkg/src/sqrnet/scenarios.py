"""Benchmark data generation with analytic true-quantile oracles.

Each scenario draws covariates uniformly on the unit cube and sets
``y = g(x) + s(x) * noise``. Because the generating mechanism is known,
the true conditional quantile is available in closed form:

    q_tau(x) = g(x) + s(x) * Q_noise(tau),

which is what the benchmark scores fitted models against. A CSV loader
and a seeded splitter cover the real-data path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import NoiseLaw, quantile, sample
from .rng import Rng, as_rng

_TWO_PI = 2.0 * math.pi


@dataclass
class Dataset:
    """Design matrix, response vector, and where they came from."""

    X: np.ndarray
    y: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise ValueError(f"X must be 2-dimensional, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError(
                f"y shape {self.y.shape} does not match {self.X.shape[0]} rows"
            )
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite entries")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        prov = dict(self.provenance)
        prov["subset_size"] = int(idx.size)
        return Dataset(self.X[idx], self.y[idx], prov)


class Scenario:
    """A named generating mechanism with mean g, noise scale s, noise law."""

    def __init__(self, scenario_id: str, dim: int, law: NoiseLaw):
        self.id = scenario_id
        self.dim = dim
        self.law = law

    def mean(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scale(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise ValueError(
                f"{self.id} expects {self.dim} features, got {X.shape[1]}"
            )
        return X


class _ScenarioOne(Scenario):
    """d=2, smooth wavy mean, t(2) noise whose scale vanishes at (1, 0)."""

    def __init__(self):
        super().__init__("S1", 2, NoiseLaw.student_t(2))

    def mean(self, X):
        X = self._check(X)
        z1, z2 = X[:, 0], X[:, 1]
        return np.cos(_TWO_PI * z1**2) + np.sin(np.sqrt(z1**2 + 2.0 * z2) + 2.0)

    def scale(self, X):
        X = self._check(X)
        return np.sqrt((X[:, 0] - 1.0) ** 2 + X[:, 1] ** 2) / 2.0


class _ScenarioTwo(Scenario):
    """d=5, square-root mean, t(3) noise scaled by sqrt(x'eta)."""

    _ETA = np.array([0.5, 0.0, 0.5, 0.0, 0.5])

    def __init__(self):
        super().__init__("S2", 5, NoiseLaw.student_t(3))

    def _radicand(self, X):
        return X[:, 0] + 2.0 * X[:, 1] + X[:, 2] + 2.0 * X[:, 3] + X[:, 4]

    def mean(self, X):
        X = self._check(X)
        rad = self._radicand(X)
        if np.any(rad < 0):
            raise ValueError("S2 mean is undefined where z1+2*z2+z3+2*z4+z5 < 0")
        return np.sqrt(rad)

    def scale(self, X):
        X = self._check(X)
        return np.sqrt(X @ self._ETA)


class _ScenarioThree(Scenario):
    """d=5, piecewise-continuous composed mean, Laplace(0, 2) noise."""

    def __init__(self):
        super().__init__("S3", 5, NoiseLaw.laplace(2.0))

    def mean(self, X):
        X = self._check(X)
        w1 = X[:, 0] + 3.0 * X[:, 1]
        w2 = np.cos(_TWO_PI * (X[:, 2] + X[:, 3]))
        w3 = X[:, 1] + np.sqrt(X[:, 2]) + 2.0 * X[:, 4]
        # Branch on the sign of the middle coordinate; the surface is only
        # piecewise continuous, which is the point of this scenario. The
        # radicands are nonnegative on the unit cube, but clamp defensively.
        lower = w1 + np.sqrt(np.maximum(w2**2 + w3, 0.0))
        upper = np.sqrt(np.maximum(w1 + w2, 0.0)) + 0.5 * w3
        return np.where(w2 < 0.0, lower, upper)

    def scale(self, X):
        X = self._check(X)
        return np.ones(X.shape[0])


_SCENARIOS = {"S1": _ScenarioOne, "S2": _ScenarioTwo, "S3": _ScenarioThree}


def get_scenario(scenario_id: str) -> Scenario:
    if scenario_id not in _SCENARIOS:
        raise ValueError(f"unknown scenario {scenario_id!r}; choose from {sorted(_SCENARIOS)}")
    return _SCENARIOS[scenario_id]()


def generate(scenario: Scenario, n: int, rng: "int | Rng") -> Dataset:
    """Draw ``n`` rows: X uniform on the cube, y = g(x) + s(x)*noise."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    gen = as_rng(rng)
    X = gen.uniform((n, scenario.dim))
    noise = sample(scenario.law, gen, n)
    y = scenario.mean(X) + scenario.scale(X) * noise
    return Dataset(X, y, {"scenario": scenario.id, "seed": gen.seed, "stream": gen.stream})


def true_quantile(scenario: Scenario, x, tau: float) -> "float | np.ndarray":
    """Analytic conditional quantile g(x) + s(x) * Q_noise(tau)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    out = scenario.mean(x) + scenario.scale(x) * quantile(scenario.law, tau)
    return float(out[0]) if single else out


def load_csv(path, feature_cols: list[str], target_col: str,
             row_filter: "str | None" = None) -> Dataset:
    """Load a header-first CSV into a Dataset.

    Rows failing the ``column=value`` filter (string equality) or holding a
    non-numeric cell in any selected column are dropped; the drop count is
    recorded in the provenance. Raises on a missing file or column, or if
    no rows survive.
    """
    filter_col = filter_val = None
    if row_filter:
        if "=" not in row_filter:
            raise ValueError(f"row filter must look like column=value, got {row_filter!r}")
        filter_col, filter_val = row_filter.split("=", 1)

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in [*feature_cols, target_col] if c not in header]
        if filter_col is not None and filter_col not in header:
            missing.append(filter_col)
        if missing:
            raise ValueError(f"missing columns in {path}: {missing}")
        rows_X, rows_y, dropped = [], [], 0
        for row in reader:
            if filter_col is not None and row[filter_col] != filter_val:
                dropped += 1
                continue
            try:
                feats = [float(row[c]) for c in feature_cols]
                target = float(row[target_col])
            except (TypeError, ValueError):
                dropped += 1
                continue
            if not all(math.isfinite(v) for v in [*feats, target]):
                dropped += 1
                continue
            rows_X.append(feats)
            rows_y.append(target)

    if not rows_X:
        raise ValueError(f"no rows of {path} survive the filter/numeric checks")
    prov = {
        "file": str(path),
        "features": list(feature_cols),
        "target": target_col,
        "filter": row_filter,
        "dropped": dropped,
    }
    return Dataset(np.array(rows_X), np.array(rows_y), prov)


def split(dataset: Dataset, fractions: dict[str, float],
          rng: "int | Rng") -> dict[str, np.ndarray]:
    """Partition row indices by a seeded shuffle.

    ``fractions`` maps partition names to fractions; sizes are the rounded
    fractions and the remainder goes to ``"train"``. Every index lands in
    exactly one partition.
    """
    total = sum(fractions.values())
    if total > 1.0 + 1e-12:
        raise ValueError(f"fractions sum to {total}, must be <= 1")
    if "train" in fractions:
        raise ValueError("'train' is the implicit remainder partition")
    n = dataset.n
    sizes = {name: round(n * frac) for name, frac in fractions.items()}
    taken = sum(sizes.values())
    if taken > n:
        raise ValueError(f"partitions need {taken} rows but only {n} available")
    for name, size in sizes.items():
        if size == 0:
            raise ValueError(
                f"partition {name!r} would be empty: {n} rows at fraction {fractions[name]}"
            )
    perm = as_rng(rng).permutation(n)
    parts: dict[str, np.ndarray] = {}
    start = 0
    for name in fractions:
        parts[name] = np.sort(perm[start:start + sizes[name]])
        start += sizes[name]
    parts["train"] = np.sort(perm[start:])
    return parts


def standardize_columns(X_train: np.ndarray, *others: np.ndarray):
    """Shift/scale features by training-split statistics.

    Returns the standardized training matrix, the transformed extras, and
    the (mean, std) pair so predictions can reuse the same transform.
    Constant columns get unit scale so they pass through unchanged.
    """
    mean = X_train.mean(axis=0)
    std = X_train.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    transformed = [(X - mean) / std for X in (X_train, *others)]
    return (*transformed, (mean, std))

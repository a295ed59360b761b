"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np


def check_matrix(X, name: str = "X", n_cols: "int | None" = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError(f"{name} has no rows")
    if n_cols is not None and X.shape[1] != n_cols:
        raise ValueError(f"{name} must have {n_cols} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_vector(y, name: str = "y", length: "int | None" = None) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError(f"{name} is empty")
    if length is not None and y.size != length:
        raise ValueError(f"{name} must have length {length}, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    return y


def check_quantile_level(tau, name: str = "tau") -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {tau}")
    return tau


def check_quantile_levels(taus, name: str = "tau") -> tuple[float, ...]:
    levels = tuple(check_quantile_level(t, name) for t in np.atleast_1d(taus))
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"{name} levels must be strictly increasing, got {levels}")
    return levels


def check_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_choice(value, options, name: str):
    if value not in options:
        raise ValueError(f"{name} must be one of {tuple(options)}, got {value!r}")
    return value

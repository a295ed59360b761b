"""Artifact loading and schema validation for the figure scripts.

Every loader validates before returning; rendering never recomputes any
science, it only draws numbers found in the artifacts. CSV artifacts may
carry leading ``#`` comment lines (the embedded config), which are
skipped.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """The artifact does not match its documented schema."""


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    lines = [ln.rstrip("\n") for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: no table content")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {i + 1} has {len(row)} cells, "
                              f"header has {len(header)}")
    return header, rows


def _to_float(token: str, path, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise SchemaError(f"{path}: non-numeric {what}: {token!r}")


def load_loss_curves(path) -> dict[str, np.ndarray]:
    """Loss-curve CSV: columns u, pinball, smoothed_h<h>..."""
    header, rows = _read_table(path)
    if header[:2] != ["u", "pinball"]:
        raise SchemaError(f"{path}: expected leading columns u,pinball, got {header[:2]}")
    smoothed = [c for c in header[2:] if c.startswith("smoothed_h")]
    if not smoothed or len(smoothed) != len(header) - 2:
        raise SchemaError(f"{path}: expected smoothed_h<h> columns, got {header[2:]}")
    if not rows:
        raise SchemaError(f"{path}: empty curve table")
    columns = {name: np.array([_to_float(r[j], path, name) for r in rows])
               for j, name in enumerate(header)}
    return columns


def smoothing_levels(columns: dict[str, np.ndarray]) -> list[float]:
    return [float(name.removeprefix("smoothed_h"))
            for name in columns if name.startswith("smoothed_h")]


def load_bench_aggregate(path) -> dict:
    """Benchmark aggregate JSON with per-cell mean/stderr aggregates."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "sqrnet.bench":
        raise SchemaError(f"{path}: not a sqrnet.bench document")
    cells = doc.get("cells")
    if not isinstance(cells, list) or not cells:
        raise SchemaError(f"{path}: no cells")
    for cell in cells:
        agg = cell.get("aggregates", {})
        ts = agg.get("train_seconds")
        if not ts or "mean" not in ts or "stderr" not in ts:
            raise SchemaError(f"{path}: cell lacks train_seconds aggregates")
        if "method" not in cell or "tau" not in cell:
            raise SchemaError(f"{path}: cell lacks method/tau labels")
    return doc


def load_rate(path) -> dict:
    """Rate JSON: points (n, mse_mean) plus the fitted slope/intercept."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "sqrnet.rate":
        raise SchemaError(f"{path}: not a sqrnet.rate document")
    points = doc.get("points")
    if not isinstance(points, list) or len(points) < 2:
        raise SchemaError(f"{path}: need at least two rate points")
    for p in points:
        if "n" not in p or "mse_mean" not in p:
            raise SchemaError(f"{path}: point lacks n/mse_mean")
        if p["mse_mean"] <= 0:
            raise SchemaError(f"{path}: nonpositive mse {p['mse_mean']}")
    fit = doc.get("fit", {})
    for key in ("slope", "intercept", "r_squared"):
        if key not in fit:
            raise SchemaError(f"{path}: fit lacks {key}")
    return doc


def load_surface(path) -> tuple[np.ndarray, np.ndarray, np.ma.MaskedArray]:
    """Landscape CSV grid; ``inf`` cells come back masked."""
    header, rows = _read_table(path)
    if not header[0].startswith("alpha"):
        raise SchemaError(f"{path}: first header cell should label the alpha axis")
    if len(header) < 2 or not rows:
        raise SchemaError(f"{path}: grid too small")
    betas = np.array([_to_float(tok, path, "beta") for tok in header[1:]])
    alphas = np.array([_to_float(r[0], path, "alpha") for r in rows])
    grid = np.array([[_to_float(tok, path, "loss") for tok in r[1:]] for r in rows])
    if grid.shape != (alphas.size, betas.size):
        raise SchemaError(f"{path}: body shape {grid.shape} mismatches axes")
    masked = np.ma.masked_invalid(grid)
    return alphas, betas, masked

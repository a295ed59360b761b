"""Loss surfaces along two filter-normalized random directions.

A direction is a model-shaped set of Gaussian draws rescaled so each
output-neuron's incoming weight row has the same norm as the model's
corresponding row (and biases match per neuron). The surface is the mean
training loss on a grid of two-direction perturbations; non-finite
evaluations are recorded as +inf rather than aborting the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .losses import LossSpec, pinball_loss, smoothed_loss
from .network import GradientSet, MlpModel
from .rng import Rng, as_rng
from .scenarios import Dataset


@dataclass
class LandscapeSpec:
    dataset: Dataset
    loss_spec: LossSpec
    resolution: int = 51
    alpha_range: tuple[float, float] = (-1.0, 1.0)
    beta_range: tuple[float, float] = (-1.0, 1.0)
    direction_seed: int = 0
    include_biases: bool = True

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError(f"grid resolution must be >= 2, got {self.resolution}")
        for name, (lo, hi) in (("alpha", self.alpha_range), ("beta", self.beta_range)):
            if not lo <= 0.0 <= hi:
                raise ValueError(f"{name} range {lo, hi} must contain 0")
            if not lo < hi:
                raise ValueError(f"{name} range {lo, hi} is empty")


def _axis(lo: float, hi: float, resolution: int) -> np.ndarray:
    axis = np.linspace(lo, hi, resolution)
    # Make sure a symmetric odd grid hits 0 exactly, so the center cell is
    # evaluated at the unperturbed parameters.
    if resolution % 2 == 1 and lo == -hi:
        axis[resolution // 2] = 0.0
    return axis


def random_direction(model: MlpModel, rng: "int | Rng",
                     include_biases: bool = True) -> GradientSet:
    """Gaussian direction, filter-normalized to the model's row norms.

    The raw draws depend only on the seed and the layer shapes, so two
    same-shaped models given the same seed share raw directions before
    normalization. Rows (and bias entries) whose model norm is zero get a
    zero direction.
    """
    gen = as_rng(rng)
    direction = GradientSet(
        [np.asarray(gen.standard_normal(w.shape), dtype=float) for w in model.weights],
        [np.asarray(gen.standard_normal(b.shape), dtype=float) for b in model.biases],
    )
    for dw, w in zip(direction.weights, model.weights):
        target = np.linalg.norm(w, axis=1)
        raw = np.linalg.norm(dw, axis=1)
        scale = np.divide(target, raw, out=np.zeros_like(target), where=raw > 0)
        scale[target == 0.0] = 0.0
        dw *= scale[:, None]
    for db, b in zip(direction.biases, model.biases):
        if not include_biases:
            db[...] = 0.0
            continue
        raw = np.abs(db)
        scale = np.divide(np.abs(b), raw, out=np.zeros_like(raw), where=raw > 0)
        scale[b == 0.0] = 0.0
        db *= scale
    return direction


def _mean_loss(model: MlpModel, dataset: Dataset, spec: LossSpec) -> float:
    preds = model.predict(dataset.X)[:, 0]
    residuals = dataset.y - preds
    if spec.is_smoothed:
        values = smoothed_loss(residuals, spec)
    else:
        values = pinball_loss(residuals, spec.tau)
    return float(np.mean(values))


def surface(model: MlpModel, d1: GradientSet, d2: GradientSet,
            spec: LandscapeSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid of mean training losses at theta + alpha*d1 + beta*d2.

    Returns (alphas, betas, grid) with grid[i, j] the loss at
    (alphas[i], betas[j]). The input model is never mutated; the center of
    a symmetric odd grid reproduces the base loss exactly.
    """
    for d in (d1, d2):
        for arr, p in zip(d.arrays(), model.params()):
            if arr.shape != p.shape:
                raise ValueError("direction shape does not match model")
    alphas = _axis(*spec.alpha_range, spec.resolution)
    betas = _axis(*spec.beta_range, spec.resolution)
    probe = model.copy()
    grid = np.empty((spec.resolution, spec.resolution))
    for i, a in enumerate(alphas):
        for j, b in enumerate(betas):
            for dst, base, u, v in zip(probe.params(), model.params(),
                                       d1.arrays(), d2.arrays()):
                dst[...] = base + a * u + b * v
            try:
                value = _mean_loss(probe, spec.dataset, spec.loss_spec)
            except FloatingPointError:
                value = math.inf
            grid[i, j] = value if math.isfinite(value) else math.inf
    return alphas, betas, grid


def write_surface_csv(path, alphas: np.ndarray, betas: np.ndarray,
                      grid: np.ndarray, header_comment: "str | None" = None) -> None:
    """CSV grid: header row of beta values, first column alpha values.

    Non-finite losses are serialized as ``inf``.
    """
    def fmt(x: float) -> str:
        return "inf" if math.isinf(x) else repr(float(x))

    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("alpha\\beta," + ",".join(fmt(b) for b in betas) + "\n")
        for i, a in enumerate(alphas):
            fh.write(fmt(a) + "," + ",".join(fmt(v) for v in grid[i]) + "\n")


def read_surface_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_surface_csv` (comment lines are skipped)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    betas = np.array([float(tok) for tok in lines[0].split(",")[1:]])
    alphas, rows = [], []
    for ln in lines[1:]:
        toks = ln.split(",")
        alphas.append(float(toks[0]))
        rows.append([float(tok) for tok in toks[1:]])
    return np.array(alphas), betas, np.array(rows)

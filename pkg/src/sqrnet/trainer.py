"""Mini-batch training loops and bandwidth cross-validation.

``train_single`` fits one network to one quantile level. For several
levels at once, ``train_noncrossing`` emits one raw head per level and
builds the predicted quantiles as cumulative softplus increments over the
first head, which makes crossing impossible for any parameter values, not
just trained ones. ``cv_bandwidth`` grid-searches the kernel scale with
K-fold validation scored by the raw check loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .losses import LossSpec, batch_loss_and_grad, pinball_loss, smoothed_loss
from .network import Architecture, GradientSet, MlpModel, backward
from .optimizer import EarlyStop, PlateauScheduler, SgdState, sgd_step
from .rng import Rng, as_rng
from .scenarios import Dataset, split

DEFAULT_BANDWIDTH_GRID = (0.001, 0.005, 0.01, 0.05, 0.1)


class TrainingDiverged(RuntimeError):
    """Raised when a non-finite loss or gradient shows up mid-training."""

    def __init__(self, epoch: int, batch: int, message: str = "non-finite loss"):
        super().__init__(f"{message} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    max_epochs: int = 100
    learning_rate: float = 0.1
    momentum: float = 0.9
    nesterov: bool = True
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    early_stop: bool = True
    lr_threshold: float = 1e-4
    stop_patience: int = 5
    val_fraction: float = 0.1
    shared_trunk: bool = True
    restore_best: bool = False
    deterministic: bool = True

    def __post_init__(self):
        problems = []
        if self.batch_size < 1:
            problems.append(f"batch_size must be positive, got {self.batch_size}")
        if self.max_epochs < 1:
            problems.append(f"max_epochs must be positive, got {self.max_epochs}")
        if self.learning_rate <= 0:
            problems.append(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            problems.append(f"momentum must lie in [0, 1), got {self.momentum}")
        if not 0.0 < self.scheduler_factor < 1.0:
            problems.append(f"scheduler_factor must lie in (0, 1), got {self.scheduler_factor}")
        if self.scheduler_patience < 1:
            problems.append(f"scheduler_patience must be positive, got {self.scheduler_patience}")
        if self.lr_threshold <= 0:
            problems.append(f"lr_threshold must be positive, got {self.lr_threshold}")
        if self.stop_patience < 1:
            problems.append(f"stop_patience must be positive, got {self.stop_patience}")
        if not 0.0 < self.val_fraction < 0.5:
            problems.append(f"val_fraction must lie in (0, 0.5), got {self.val_fraction}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


def softplus(x):
    """log(1 + e^x) computed without overflow."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def noncrossing_transform(raw: np.ndarray) -> np.ndarray:
    """Map raw heads (n, m+1) to ordered quantile predictions.

    Column 0 passes through; every later column adds a softplus increment,
    so the result is strictly increasing across columns for every row.
    """
    raw = np.asarray(raw, dtype=float)
    out = np.empty_like(raw)
    out[:, 0] = raw[:, 0]
    for j in range(1, raw.shape[1]):
        out[:, j] = out[:, j - 1] + softplus(raw[:, j])
    return out


@dataclass
class FittedQuantileModel:
    """A trained model plus everything needed to use and audit it."""

    networks: list[MlpModel]
    taus: tuple[float, ...]
    loss_specs: tuple[LossSpec, ...]
    history: list[EpochRecord]
    noncrossing: bool = False
    shared_trunk: bool = True

    @property
    def model(self) -> MlpModel:
        """The network (single-quantile or shared-trunk joint models)."""
        if len(self.networks) != 1:
            raise ValueError("separate-networks model has no single network")
        return self.networks[0]

    @property
    def epochs_run(self) -> int:
        return len(self.history)

    def raw_outputs(self, X: np.ndarray) -> np.ndarray:
        if self.shared_trunk:
            return self.networks[0].predict(X)
        return np.column_stack([net.predict(X)[:, 0] for net in self.networks])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Quantile predictions: shape (n,) for one level, (n, m+1) for many."""
        raw = self.raw_outputs(X)
        if not self.noncrossing:
            return raw[:, 0] if raw.shape[1] == 1 else raw
        return noncrossing_transform(raw)

    # -- persistence ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": "sqrnet.quantile_model",
            "version": 1,
            "taus": list(self.taus),
            "noncrossing": self.noncrossing,
            "shared_trunk": self.shared_trunk,
            "losses": [
                {"tau": s.tau, "kernel": s.kernel, "bandwidth": s.bandwidth}
                for s in self.loss_specs
            ],
            "history": [
                {"epoch": r.epoch, "train_loss": r.train_loss,
                 "val_loss": r.val_loss, "lr": r.lr}
                for r in self.history
            ],
            "networks": [net.to_json() for net in self.networks],
        }

    @staticmethod
    def from_json(doc: dict) -> "FittedQuantileModel":
        if doc.get("format") != "sqrnet.quantile_model":
            raise ValueError("not a sqrnet.quantile_model document")
        if doc.get("version") != 1:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        specs = tuple(
            LossSpec(tau=l["tau"], kernel=l["kernel"], bandwidth=l["bandwidth"])
            for l in doc["losses"]
        )
        history = [EpochRecord(r["epoch"], r["train_loss"], r["val_loss"], r["lr"])
                   for r in doc["history"]]
        return FittedQuantileModel(
            [MlpModel.from_json(n) for n in doc["networks"]],
            tuple(doc["taus"]), specs, history,
            noncrossing=doc["noncrossing"], shared_trunk=doc["shared_trunk"],
        )


def _objective(residual_cols: np.ndarray, specs: tuple[LossSpec, ...]) -> float:
    """Sum over heads of the mean per-head loss."""
    total = 0.0
    for j, spec in enumerate(specs):
        col = residual_cols[:, j]
        if spec.is_smoothed:
            total += float(np.mean(smoothed_loss(col, spec)))
        else:
            total += float(np.mean(pinball_loss(col, spec.tau)))
    return total


def _val_split(dataset: Dataset, config: TrainConfig, rng: Rng):
    n_val = round(dataset.n * config.val_fraction)
    if n_val == 0 or n_val >= dataset.n:
        # Tiny datasets: validate on the training data itself.
        idx = np.arange(dataset.n)
        return dataset, dataset, idx
    parts = split(dataset, {"val": config.val_fraction}, rng)
    return dataset.subset(parts["train"]), dataset.subset(parts["val"]), parts["train"]


def _joint_loss_and_doutput(raw: np.ndarray, y: np.ndarray,
                            specs: tuple[LossSpec, ...]):
    """Joint objective value and its gradient w.r.t. the raw heads."""
    preds = noncrossing_transform(raw)
    total = 0.0
    dpred = np.empty_like(preds)
    for j, spec in enumerate(specs):
        loss_j, dresid = batch_loss_and_grad(y - preds[:, j], spec)
        total += loss_j
        dpred[:, j] = -dresid
    # Chain through the cumulative softplus: head j feeds predictions j..m.
    tail_sums = np.cumsum(dpred[:, ::-1], axis=1)[:, ::-1]
    draw = np.empty_like(raw)
    draw[:, 0] = tail_sums[:, 0]
    if raw.shape[1] > 1:
        draw[:, 1:] = tail_sums[:, 1:] * sigmoid(raw[:, 1:])
    return total, draw


def _run_epochs(train_ds: Dataset, val_ds: Dataset, models: list[MlpModel],
                specs: tuple[LossSpec, ...], config: TrainConfig,
                shuffle_rng: Rng, joint: bool):
    """Shared epoch loop for the single and joint trainers (in-place)."""
    states = [SgdState.zeros(m, config.momentum, config.nesterov) for m in models]
    sched = PlateauScheduler(
        lr=config.learning_rate,
        factor=config.scheduler_factor,
        patience=config.scheduler_patience,
    )
    stopper = EarlyStop(config.lr_threshold, config.stop_patience) if config.early_stop else None
    history: list[EpochRecord] = []
    best_val, best_snapshot = math.inf, None

    n = train_ds.n
    for epoch in range(1, config.max_epochs + 1):
        perm = shuffle_rng.permutation(n)
        batch_losses = []
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = perm[start:start + config.batch_size]
            Xb, yb = train_ds.X[idx], train_ds.y[idx]
            try:
                if joint:
                    outs_caches = [m.forward(Xb) for m in models]
                    raw = (outs_caches[0][0] if config.shared_trunk
                           else np.column_stack([oc[0][:, 0] for oc in outs_caches]))
                    loss, draw = _joint_loss_and_doutput(raw, yb, specs)
                    if not math.isfinite(loss):
                        raise TrainingDiverged(epoch, b)
                    if config.shared_trunk:
                        grads = backward(models[0], outs_caches[0][1], draw)
                        sgd_step(models[0], grads, states[0], sched.lr)
                    else:
                        for k, (m, (out, cache)) in enumerate(zip(models, outs_caches)):
                            grads = backward(m, cache, draw[:, k:k + 1])
                            sgd_step(m, grads, states[k], sched.lr)
                else:
                    out, cache = models[0].forward(Xb)
                    loss, dresid = batch_loss_and_grad(yb - out[:, 0], specs[0])
                    if not math.isfinite(loss):
                        raise TrainingDiverged(epoch, b)
                    grads = backward(models[0], cache, -dresid[:, None])
                    sgd_step(models[0], grads, states[0], sched.lr)
            except FloatingPointError:
                raise TrainingDiverged(epoch, b, "non-finite gradient") from None
            batch_losses.append(loss)

        val_loss = _evaluate_objective(val_ds, models, specs, config, joint)
        if not math.isfinite(val_loss):
            raise TrainingDiverged(epoch, -1, "non-finite validation loss")
        if config.restore_best and val_loss < best_val:
            best_val = val_loss
            best_snapshot = [m.copy() for m in models]
        lr = sched.update(val_loss)
        history.append(EpochRecord(epoch, float(np.mean(batch_losses)), val_loss, lr))
        if stopper is not None and stopper.update(lr, val_loss):
            break

    if config.restore_best and best_snapshot is not None:
        for m, snap in zip(models, best_snapshot):
            for dst, src in zip(m.params(), snap.params()):
                dst[...] = src
    return history


def _evaluate_objective(ds: Dataset, models: list[MlpModel],
                        specs: tuple[LossSpec, ...], config: TrainConfig,
                        joint: bool) -> float:
    if joint:
        raw = (models[0].predict(ds.X) if config.shared_trunk
               else np.column_stack([m.predict(ds.X)[:, 0] for m in models]))
        preds = noncrossing_transform(raw)
    else:
        preds = models[0].predict(ds.X)
    return _objective(ds.y[:, None] - preds, specs)


def train_single(dataset: Dataset, arch: Architecture, loss_spec: LossSpec,
                 config: TrainConfig, seed: "int | Rng") -> FittedQuantileModel:
    """Fit one network to one quantile level."""
    if dataset.n < 1:
        raise ValueError("dataset is empty")
    if arch.n_outputs != 1:
        raise ValueError(f"single-quantile training needs n_outputs=1, got {arch.n_outputs}")
    if arch.input_dim != dataset.dim:
        raise ValueError(f"architecture expects {arch.input_dim} features, data has {dataset.dim}")
    rng = as_rng(seed)
    model = MlpModel.init(arch, rng.split(0))
    train_ds, val_ds, _ = _val_split(dataset, config, rng.split(1))
    history = _run_epochs(train_ds, val_ds, [model], (loss_spec,), config,
                          rng.split(2), joint=False)
    return FittedQuantileModel([model], (loss_spec.tau,), (loss_spec,), history)


def train_noncrossing(dataset: Dataset, arch: Architecture, taus,
                      loss_specs, config: TrainConfig,
                      seed: "int | Rng") -> FittedQuantileModel:
    """Jointly fit all quantile levels with the non-crossing construction."""
    taus = tuple(float(t) for t in taus)
    loss_specs = tuple(loss_specs)
    if len(taus) < 2:
        raise ValueError("joint estimation needs at least two quantile levels")
    if any(b >= a for a, b in zip(taus[1:], taus[:-1])):
        raise ValueError(f"quantile levels must be strictly increasing, got {taus}")
    if len(loss_specs) != len(taus):
        raise ValueError("need one loss spec per quantile level")
    for t, spec in zip(taus, loss_specs):
        if spec.tau != t:
            raise ValueError(f"loss spec tau {spec.tau} does not match level {t}")
    if dataset.n < 1:
        raise ValueError("dataset is empty")
    if arch.input_dim != dataset.dim:
        raise ValueError(f"architecture expects {arch.input_dim} features, data has {dataset.dim}")

    rng = as_rng(seed)
    if config.shared_trunk:
        if arch.n_outputs != len(taus):
            raise ValueError(
                f"shared-trunk joint training needs n_outputs={len(taus)}, got {arch.n_outputs}"
            )
        models = [MlpModel.init(arch, rng.split(0))]
    else:
        head_arch = replace(arch, n_outputs=1)
        models = [MlpModel.init(head_arch, rng.split(0).split(k)) for k in range(len(taus))]

    train_ds, val_ds, _ = _val_split(dataset, config, rng.split(1))
    history = _run_epochs(train_ds, val_ds, models, loss_specs, config,
                          rng.split(2), joint=True)
    return FittedQuantileModel(models, taus, loss_specs, history,
                               noncrossing=True, shared_trunk=config.shared_trunk)


def cv_bandwidth(dataset: Dataset, arch: Architecture, tau: float, kernel: str,
                 candidates=DEFAULT_BANDWIDTH_GRID, n_folds: int = 5,
                 config: TrainConfig = TrainConfig(), seed: "int | Rng" = 0,
                 train_fn=None) -> tuple[float, dict[float, float]]:
    """Pick the kernel scale by K-fold CV scored with the raw check loss.

    Every index is held out exactly once. Ties break toward the smaller
    candidate. ``train_fn`` exists so tests can substitute a stub trainer;
    it must accept the same arguments as :func:`train_single`.
    """
    candidates = tuple(float(h) for h in candidates)
    if not candidates:
        raise ValueError("need at least one candidate bandwidth")
    if n_folds < 2:
        raise ValueError(f"need at least 2 folds, got {n_folds}")
    if dataset.n < n_folds:
        raise ValueError(f"cannot make {n_folds} folds from {dataset.n} rows")
    if train_fn is None:
        train_fn = train_single

    rng = as_rng(seed)
    perm = rng.split(0).permutation(dataset.n)
    folds = np.array_split(perm, n_folds)
    scores: dict[float, float] = {}
    for i, h in enumerate(candidates):
        spec = LossSpec.smoothed(tau, kernel, h)
        fold_scores = []
        for k, held_out in enumerate(folds):
            train_idx = np.setdiff1d(perm, held_out, assume_unique=True)
            fitted = train_fn(dataset.subset(train_idx), arch, spec, config,
                              rng.split(1).split(i).split(k))
            preds = fitted.predict(dataset.X[held_out])
            fold_scores.append(float(np.mean(pinball_loss(dataset.y[held_out] - preds, tau))))
        scores[h] = float(np.mean(fold_scores))
    best = min(candidates, key=lambda h: (scores[h], h))
    return best, scores

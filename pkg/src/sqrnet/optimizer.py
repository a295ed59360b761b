"""SGD with Nesterov momentum, plateau-halving learning rate, early stop.

The update is the single-sequence Nesterov form

    v <- mu*v + g
    theta <- theta - lr*(g + mu*v)

which is equivalent to the classical two-sequence formulation under the
usual change of variables (see the optimizer tests). The scheduler halves
the learning rate after ``patience`` consecutive epochs without a
validation improvement; training stops once the learning rate has fallen
below a threshold AND validation has stalled again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import GradientSet, MlpModel


@dataclass
class SgdState:
    """Velocity buffers congruent with the model parameters."""

    velocities: GradientSet
    momentum: float = 0.9
    nesterov: bool = True

    @staticmethod
    def zeros(model: MlpModel, momentum: float = 0.9, nesterov: bool = True) -> "SgdState":
        return SgdState(GradientSet.zeros_like(model), momentum, nesterov)


def sgd_step(model: MlpModel, grads: GradientSet, state: SgdState,
             lr: float) -> tuple[MlpModel, SgdState]:
    """One parameter update, in place; returns (model, state) for chaining."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    mu = state.momentum
    params = list(model.params())
    gs = list(grads.arrays())
    vs = list(state.velocities.arrays())
    if len(params) != len(gs):
        raise ValueError("gradient set does not match model")
    for theta, g, v in zip(params, gs, vs):
        if theta.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {theta.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient entries")
        v *= mu
        v += g
        if state.nesterov:
            theta -= lr * (g + mu * v)
        else:
            theta -= lr * v
    return model, state


def _improved(best: float, loss: float, rel_tol: float) -> bool:
    # Relative tolerance keeps floating-point noise from resetting counters.
    if not math.isfinite(best):
        return math.isfinite(loss)
    return loss < best - rel_tol * abs(best)


@dataclass
class PlateauScheduler:
    """Halve the learning rate after ``patience`` non-improving epochs."""

    lr: float = 0.1
    factor: float = 0.5
    patience: int = 5
    rel_tol: float = 1e-8
    best_val: float = math.inf
    bad_epochs: int = 0

    def update(self, epoch_val_loss: float) -> float:
        if not math.isfinite(epoch_val_loss):
            raise ValueError(f"validation loss must be finite, got {epoch_val_loss}")
        if _improved(self.best_val, epoch_val_loss, self.rel_tol):
            self.best_val = epoch_val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs > self.patience:
                self.lr *= self.factor
                self.bad_epochs = 0
        return self.lr


@dataclass
class EarlyStop:
    """Stop once lr < threshold AND validation has stalled for ``patience`` epochs."""

    lr_threshold: float = 1e-4
    patience: int = 5
    rel_tol: float = 1e-8
    best_val: float = math.inf
    streak: int = 0

    def update(self, lr: float, epoch_val_loss: float) -> bool:
        if _improved(self.best_val, epoch_val_loss, self.rel_tol):
            self.best_val = epoch_val_loss
            self.streak = 0
        else:
            self.streak += 1
        return lr < self.lr_threshold and self.streak >= self.patience

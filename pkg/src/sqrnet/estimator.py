"""Scikit-learn style front end for the quantile network trainers.

``QuantileNetRegressor`` follows the usual estimator conventions
(constructor stores hyperparameters verbatim, ``fit``/``predict``,
``get_params``/``set_params`` via :class:`sklearn.base.BaseEstimator`),
so it composes with pipelines, grid search, and `clone`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .losses import KERNELS, LossSpec
from .network import Architecture
from .scenarios import Dataset, standardize_columns
from .trainer import TrainConfig, train_noncrossing, train_single
from .validation import (
    check_matrix,
    check_quantile_levels,
    check_vector,
)
from .evaluation import pinball_risk


class QuantileNetRegressor(BaseEstimator):
    """ReLU-network conditional quantile regression.

    Parameters
    ----------
    tau : float or sequence of floats
        Quantile level(s). A sequence triggers joint training with the
        structural non-crossing construction; levels must be strictly
        increasing.
    kernel : str or None
        Smoothing kernel (``gaussian``, ``uniform``, ``epanechnikov``), or
        None for the raw check loss.
    bandwidth : float or None
        Kernel scale h > 0; required when ``kernel`` is set.
    hidden_widths : sequence of int
        Hidden layer widths.
    residual : bool
        Add identity skips to every hidden layer after the first
        (requires a uniform hidden width).
    standardize : bool
        Shift/scale features by their training statistics before fitting;
        predictions reuse the stored transform.
    early_stop : bool
        Stop once the learning rate is below ``lr_threshold`` and
        validation has stalled ``stop_patience`` epochs in a row.

    The remaining parameters mirror :class:`sqrnet.trainer.TrainConfig`.
    """

    def __init__(self, tau=0.5, kernel="gaussian", bandwidth=0.05,
                 hidden_widths=(70, 70, 70, 70, 70), residual=False,
                 batch_size=128, max_epochs=100, learning_rate=0.1,
                 momentum=0.9, nesterov=True, scheduler_factor=0.5,
                 scheduler_patience=5, early_stop=True, lr_threshold=1e-4,
                 stop_patience=5, val_fraction=0.1, shared_trunk=True,
                 restore_best=False, standardize=False, random_state=0):
        self.tau = tau
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.hidden_widths = hidden_widths
        self.residual = residual
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.nesterov = nesterov
        self.scheduler_factor = scheduler_factor
        self.scheduler_patience = scheduler_patience
        self.early_stop = early_stop
        self.lr_threshold = lr_threshold
        self.stop_patience = stop_patience
        self.val_fraction = val_fraction
        self.shared_trunk = shared_trunk
        self.restore_best = restore_best
        self.standardize = standardize
        self.random_state = random_state

    # -- sklearn plumbing ----------------------------------------------------

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            nesterov=self.nesterov,
            scheduler_factor=self.scheduler_factor,
            scheduler_patience=self.scheduler_patience,
            early_stop=self.early_stop,
            lr_threshold=self.lr_threshold,
            stop_patience=self.stop_patience,
            val_fraction=self.val_fraction,
            shared_trunk=self.shared_trunk,
            restore_best=self.restore_best,
        )

    def _loss_specs(self, taus) -> tuple[LossSpec, ...]:
        if self.kernel is None:
            return tuple(LossSpec.pinball(t) for t in taus)
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS} or None, got {self.kernel!r}")
        if self.bandwidth is None or not float(self.bandwidth) > 0:
            raise ValueError(f"bandwidth must be positive when a kernel is set, got {self.bandwidth!r}")
        return tuple(LossSpec.smoothed(t, self.kernel, float(self.bandwidth)) for t in taus)

    def fit(self, X, y):
        X = check_matrix(X, "X")
        y = check_vector(y, "y", length=X.shape[0])
        taus = check_quantile_levels(self.tau)
        specs = self._loss_specs(taus)
        if self.standardize:
            X, (mean, std) = standardize_columns(X)
            self._feature_shift_ = (mean, std)
        else:
            self._feature_shift_ = None

        dataset = Dataset(X, y, {"source": "estimator"})
        arch = Architecture(
            input_dim=X.shape[1],
            hidden_widths=tuple(int(w) for w in self.hidden_widths),
            n_outputs=len(taus),
            residual=self.residual,
        )
        config = self._train_config()
        seed = int(self.random_state)
        if len(taus) == 1:
            self.fitted_ = train_single(dataset, arch, specs[0], config, seed)
        else:
            self.fitted_ = train_noncrossing(dataset, arch, taus, specs, config, seed)
        self.n_features_in_ = X.shape[1]
        self.taus_ = taus
        self.history_ = self.fitted_.history
        return self

    def predict(self, X):
        self._check_fitted()
        X = check_matrix(X, "X", n_cols=self.n_features_in_)
        if self._feature_shift_ is not None:
            mean, std = self._feature_shift_
            X = (X - mean) / std
        return self.fitted_.predict(X)

    def score(self, X, y):
        """Negative mean check loss (averaged over levels); higher is better."""
        self._check_fitted()
        y = check_vector(y, "y")
        preds = self.predict(X)
        if preds.ndim == 1:
            return -pinball_risk(preds, y, self.taus_[0])
        risks = [pinball_risk(preds[:, j], y, t) for j, t in enumerate(self.taus_)]
        return -float(np.mean(risks))

    def _check_fitted(self):
        if not hasattr(self, "fitted_"):
            raise RuntimeError("this estimator has not been fitted yet; call fit first")

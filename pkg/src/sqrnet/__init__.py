"""Kernel-smoothed quantile regression with ReLU networks.

The package trains multilayer perceptrons for conditional quantile
estimation, replacing the kinked check loss with a convex, differentiable
kernel-smoothed surrogate, and ships the simulation benchmark used to
compare the two objectives: scenario generators with analytic quantile
oracles, repeated-trial reports, bandwidth cross-validation, structurally
non-crossing multi-quantile training, and loss-surface export.
"""

from .distributions import NoiseLaw, quantile, sample, std_normal_cdf, std_normal_quantile
from .estimator import QuantileNetRegressor
from .evaluation import (
    RateFit,
    TrialReport,
    TrialSpec,
    mae,
    mse,
    pinball_risk,
    rate_fit,
    run_trials,
)
from .landscape import LandscapeSpec, random_direction, surface
from .losses import (
    KERNELS,
    LossSpec,
    batch_loss_and_grad,
    kernel_cdf,
    kernel_density,
    pinball_loss,
    smoothed_grad,
    smoothed_loss,
)
from .network import Architecture, GradientSet, MlpModel, backward, num_params
from .optimizer import EarlyStop, PlateauScheduler, SgdState, sgd_step
from .rng import Rng
from .scenarios import (
    Dataset,
    Scenario,
    generate,
    get_scenario,
    load_csv,
    split,
    true_quantile,
)
from .trainer import (
    FittedQuantileModel,
    TrainConfig,
    cv_bandwidth,
    noncrossing_transform,
    train_noncrossing,
    train_single,
)

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "Dataset",
    "EarlyStop",
    "FittedQuantileModel",
    "GradientSet",
    "KERNELS",
    "LandscapeSpec",
    "LossSpec",
    "MlpModel",
    "NoiseLaw",
    "PlateauScheduler",
    "QuantileNetRegressor",
    "RateFit",
    "Rng",
    "Scenario",
    "SgdState",
    "TrainConfig",
    "TrialReport",
    "TrialSpec",
    "backward",
    "batch_loss_and_grad",
    "cv_bandwidth",
    "generate",
    "get_scenario",
    "kernel_cdf",
    "kernel_density",
    "load_csv",
    "mae",
    "mse",
    "noncrossing_transform",
    "num_params",
    "pinball_loss",
    "pinball_risk",
    "quantile",
    "random_direction",
    "rate_fit",
    "run_trials",
    "sample",
    "sgd_step",
    "smoothed_grad",
    "smoothed_loss",
    "split",
    "std_normal_cdf",
    "std_normal_quantile",
    "surface",
    "train_noncrossing",
    "train_single",
    "true_quantile",
]

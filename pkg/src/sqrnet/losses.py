"""Check loss and its kernel-smoothed surrogate.

The raw check loss ``max(tau*u, (tau-1)*u)`` has a kink at zero. Convolving
it with a scaled kernel density produces a convex, differentiable surrogate
whose derivative is ``tau - G(-u/h)`` with G the kernel CDF. Closed forms
are implemented for the Gaussian, uniform, and Epanechnikov kernels; the
test suite checks them against adaptive quadrature of the defining
convolution integral.

For ``|u| > h`` the compact-support kernels reproduce the check loss
exactly, so smoothing only reshapes a band of width 2h around the kink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

KERNELS = ("gaussian", "uniform", "epanechnikov")

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# First absolute moment E|Z| and second moment of each kernel variate.
# E|Z| bounds the smoothing gap: |smoothed - check| <= h * E|Z|.
_ABS_MOMENT = {
    "gaussian": math.sqrt(2.0 / math.pi),
    "uniform": 0.5,
    "epanechnikov": 3.0 / 8.0,
}
_SECOND_MOMENT = {"gaussian": 1.0, "uniform": 1.0 / 3.0, "epanechnikov": 0.2}


@dataclass(frozen=True)
class LossSpec:
    """Quantile level plus the smoothing choice.

    ``kernel=None`` means the raw check loss (the baseline objective);
    otherwise ``kernel`` names the smoothing kernel and ``bandwidth`` is
    the kernel scale h > 0.
    """

    tau: float
    kernel: str | None = None
    bandwidth: float | None = None

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.kernel is None:
            if self.bandwidth is not None:
                raise ValueError("bandwidth given without a kernel")
        else:
            if self.kernel not in KERNELS:
                raise ValueError(f"unknown kernel {self.kernel!r}; choose from {KERNELS}")
            if self.bandwidth is None or not self.bandwidth > 0:
                raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")

    @property
    def is_smoothed(self) -> bool:
        return self.kernel is not None

    @staticmethod
    def pinball(tau: float) -> "LossSpec":
        return LossSpec(tau=tau)

    @staticmethod
    def smoothed(tau: float, kernel: str, bandwidth: float) -> "LossSpec":
        return LossSpec(tau=tau, kernel=kernel, bandwidth=bandwidth)

    def label(self) -> str:
        if self.kernel is None:
            return f"pinball(tau={self.tau:g})"
        return f"{self.kernel}(tau={self.tau:g}, h={self.bandwidth:g})"


def _as_float_array(u):
    return np.asarray(u, dtype=float)


def _maybe_scalar(out, like):
    return float(out) if np.ndim(like) == 0 else out


def pinball_loss(u, tau: float):
    """Check loss: tau*u for u >= 0, (tau-1)*u otherwise."""
    u = _as_float_array(u)
    out = np.where(u >= 0.0, tau * u, (tau - 1.0) * u)
    return _maybe_scalar(out, u)


def pinball_subgrad(u, tau: float):
    """Subgradient tau - 1{u < 0}; the tie at u = 0 takes the value tau."""
    u = _as_float_array(u)
    out = tau - (u < 0.0).astype(float)
    return _maybe_scalar(out, u)


def kernel_density(kind: str, t):
    """Kernel density K(t)."""
    t = _as_float_array(t)
    if kind == "gaussian":
        out = _INV_SQRT_2PI * np.exp(-0.5 * t * t)
    elif kind == "uniform":
        out = np.where(np.abs(t) <= 1.0, 0.5, 0.0)
    elif kind == "epanechnikov":
        out = np.where(np.abs(t) <= 1.0, 0.75 * (1.0 - t * t), 0.0)
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    return _maybe_scalar(out, t)


def kernel_cdf(kind: str, t):
    """Kernel CDF G(t); symmetric, so G(-t) = 1 - G(t)."""
    t = _as_float_array(t)
    if kind == "gaussian":
        out = ndtr(t)
    elif kind == "uniform":
        out = np.clip(0.5 * (1.0 + t), 0.0, 1.0)
    elif kind == "epanechnikov":
        tc = np.clip(t, -1.0, 1.0)
        out = 0.5 + (3.0 * tc - tc**3) / 4.0
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    return _maybe_scalar(out, t)


def kernel_abs_moment(kind: str) -> float:
    """E|Z| for the kernel variate; bounds the smoothing gap per unit h."""
    if kind not in _ABS_MOMENT:
        raise ValueError(f"unknown kernel {kind!r}")
    return _ABS_MOMENT[kind]


def kernel_second_moment(kind: str) -> float:
    """E[Z^2]; kept as kernel metadata, unused by training."""
    if kind not in _SECOND_MOMENT:
        raise ValueError(f"unknown kernel {kind!r}")
    return _SECOND_MOMENT[kind]


def smoothed_loss(u, spec: LossSpec):
    """Kernel-smoothed check loss, in closed form.

    Gaussian:       u*(tau - Phi(-u/h)) + h*phi(u/h)
    uniform:        (tau - 1/2)*u + u^2/(4h) + h/4          on |u| <= h
    Epanechnikov:   (tau - 1/2)*u + h*(3z^2/8 - z^4/16 + 3/16), z = u/h,
                                                            on |u| <= h
    and both compact kernels equal the check loss for |u| > h.
    """
    if not spec.is_smoothed:
        raise ValueError("smoothed_loss requires a spec with active smoothing")
    tau, h = spec.tau, spec.bandwidth
    u = _as_float_array(u)
    z = u / h
    if spec.kernel == "gaussian":
        out = u * (tau - ndtr(-z)) + h * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    elif spec.kernel == "uniform":
        inner = (tau - 0.5) * u + u * u / (4.0 * h) + 0.25 * h
        out = np.where(np.abs(u) <= h, inner, pinball_loss(u, tau))
    else:  # epanechnikov
        z2 = z * z
        inner = (tau - 0.5) * u + h * (0.375 * z2 - 0.0625 * z2 * z2 + 0.1875)
        out = np.where(np.abs(u) <= h, inner, pinball_loss(u, tau))
    return _maybe_scalar(out, u)


def smoothed_grad(u, spec: LossSpec):
    """Exact derivative of :func:`smoothed_loss`: tau - G(-u/h).

    Nondecreasing in u, with limits tau - 1 and tau; always inside
    [tau - 1, tau].
    """
    if not spec.is_smoothed:
        raise ValueError("smoothed_grad requires a spec with active smoothing")
    u = _as_float_array(u)
    out = spec.tau - kernel_cdf(spec.kernel, -u / spec.bandwidth)
    return _maybe_scalar(out, u)


def batch_loss_and_grad(residuals, spec: LossSpec) -> tuple[float, np.ndarray]:
    """Mean loss over a residual vector and the gradient of that mean.

    Element i of the returned gradient is d(mean loss)/d(residual_i), i.e.
    the per-residual derivative divided by the batch size. For the raw
    check loss the derivative is the subgradient with the u = 0 tie
    resolved to tau.
    """
    r = _as_float_array(residuals)
    if r.ndim != 1:
        raise ValueError(f"residuals must be a vector, got shape {r.shape}")
    if r.size == 0:
        raise ValueError("residuals must be non-empty")
    if spec.is_smoothed:
        losses = smoothed_loss(r, spec)
        derivs = smoothed_grad(r, spec)
    else:
        losses = pinball_loss(r, spec.tau)
        derivs = pinball_subgrad(r, spec.tau)
    return float(np.mean(losses)), derivs / r.size

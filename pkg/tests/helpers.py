"""Shared oracles for the test suite.

These deliberately avoid the library's closed forms: the loss oracle
integrates the defining convolution with adaptive quadrature, and the
gradient oracle uses central finite differences over every parameter.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from sqrnet.losses import LossSpec, batch_loss_and_grad, kernel_density, pinball_loss
from sqrnet.network import MlpModel


def quadrature_smoothed_loss(u: float, tau: float, kernel: str, h: float) -> float:
    """Integral of pinball(v) * K((v-u)/h)/h over the kernel's support."""

    def integrand(v):
        return pinball_loss(v, tau) * kernel_density(kernel, (v - u) / h) / h

    if kernel == "gaussian":
        lo, hi = u - 30.0 * h, u + 30.0 * h
    else:
        lo, hi = u - h, u + h
    points = [0.0] if lo < 0.0 < hi else None
    value, _ = quad(integrand, lo, hi, points=points,
                    epsabs=1e-12, epsrel=1e-12, limit=200)
    return value


def central_difference(f, x: float, step: float) -> float:
    return (f(x + step) - f(x - step)) / (2.0 * step)


def model_loss(model: MlpModel, X: np.ndarray, y: np.ndarray,
               specs) -> float:
    """Sum over output heads of the mean per-head loss (plain heads)."""
    out = model.predict(X)
    total = 0.0
    for j, spec in enumerate(specs):
        loss, _ = batch_loss_and_grad(y - out[:, j], spec)
        total += loss
    return total


def numerical_model_grads(model: MlpModel, X, y, specs, step: float = 1e-6):
    """Central finite differences over every weight and bias entry."""
    grads = []
    for arr in model.params():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            h = step * max(1.0, abs(orig))
            arr[idx] = orig + h
            f_plus = model_loss(model, X, y, specs)
            arr[idx] = orig - h
            f_minus = model_loss(model, X, y, specs)
            arr[idx] = orig
            g[idx] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric) -> float:
    """max |a - n| / max(1, |a|, |n|), elementwise over array lists."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def analytic_model_grads(model: MlpModel, X, y, specs):
    """Backprop gradients of :func:`model_loss`, flattened per parameter array."""
    from sqrnet.network import backward

    out, cache = model.forward(X)
    dL_dout = np.zeros_like(out)
    for j, spec in enumerate(specs):
        _, dresid = batch_loss_and_grad(y - out[:, j], spec)
        dL_dout[:, j] = -dresid
    gset = backward(model, cache, dL_dout)
    return list(gset.arrays())

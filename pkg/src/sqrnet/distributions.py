"""Noise laws used by the simulation scenarios: sampling, CDFs, quantiles.

Only the laws the benchmark needs are supported: uniform on [0,1], the
standard normal, Student-t with 2 or 3 degrees of freedom, and Laplace.
The t(2) quantile has a closed form; t(3) is inverted with safeguarded
Newton on its analytic CDF. Both round-trip ``F(Q(p)) = p`` to 1e-10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .rng import Rng, as_rng

SUPPORTED_T_DF = (2, 3)

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class NoiseLaw:
    """One of the benchmark's noise distributions.

    ``kind`` is one of ``uniform01 | std_normal | student_t | laplace``.
    ``df`` applies to ``student_t`` (only 2 and 3 are supported); ``scale``
    is the Laplace diversity parameter b > 0.
    """

    kind: str
    df: int | None = None
    scale: float | None = None

    def __post_init__(self):
        if self.kind not in ("uniform01", "std_normal", "student_t", "laplace"):
            raise ValueError(f"unsupported noise law kind: {self.kind!r}")
        if self.kind == "student_t":
            if self.df not in SUPPORTED_T_DF:
                raise ValueError(
                    f"student_t supports df in {SUPPORTED_T_DF}, got {self.df!r}"
                )
        elif self.df is not None:
            raise ValueError(f"df is only valid for student_t, not {self.kind}")
        if self.kind == "laplace":
            if self.scale is None or not self.scale > 0:
                raise ValueError(f"laplace requires scale > 0, got {self.scale!r}")
        elif self.scale is not None:
            raise ValueError(f"scale is only valid for laplace, not {self.kind}")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def uniform01() -> "NoiseLaw":
        return NoiseLaw("uniform01")

    @staticmethod
    def std_normal() -> "NoiseLaw":
        return NoiseLaw("std_normal")

    @staticmethod
    def student_t(df: int) -> "NoiseLaw":
        return NoiseLaw("student_t", df=df)

    @staticmethod
    def laplace(scale: float) -> "NoiseLaw":
        return NoiseLaw("laplace", scale=scale)

    def label(self) -> str:
        if self.kind == "student_t":
            return f"t({self.df})"
        if self.kind == "laplace":
            return f"laplace(0,{self.scale:g})"
        return self.kind


def std_normal_cdf(t):
    """Standard normal CDF, vectorized, absolute error below 1e-10."""
    return ndtr(t)


def std_normal_quantile(p):
    """Inverse standard normal CDF for p in (0,1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("probability must lie strictly inside (0, 1)")
    out = ndtri(p)
    return float(out) if out.ndim == 0 else out


def _t2_cdf(t):
    return 0.5 * (1.0 + t / np.sqrt(2.0 + t * t))


def _t2_quantile(p):
    return (2.0 * p - 1.0) * np.sqrt(2.0 / (4.0 * p * (1.0 - p)))


def _t3_cdf(t):
    t = np.asarray(t, dtype=float)
    return 0.5 + (t / (_SQRT3 * (1.0 + t * t / 3.0)) + np.arctan(t / _SQRT3)) / np.pi


def _t3_pdf(t):
    return 2.0 / (np.pi * _SQRT3 * (1.0 + t * t / 3.0) ** 2)


def _t3_quantile_scalar(p: float) -> float:
    """Safeguarded Newton on the t(3) CDF, bisection fallback, tol 1e-12."""
    if p == 0.5:
        return 0.0
    # Bracket the root; t(3) tails are fatter than normal, so widen until
    # the CDF straddles p.
    lo, hi = -1.0, 1.0
    while _t3_cdf(lo) > p:
        lo *= 2.0
    while _t3_cdf(hi) < p:
        hi *= 2.0
    x = float(_t2_quantile(p))  # decent starting point, same tail direction
    x = min(max(x, lo), hi)
    for _ in range(100):
        f = float(_t3_cdf(x)) - p
        if f > 0:
            hi = x
        else:
            lo = x
        step = f / _t3_pdf(x)
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-12 * max(1.0, abs(x_new)):
            return x_new
        x = x_new
    return x


def _laplace_cdf(x, b: float):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(x / b), 1.0 - 0.5 * np.exp(-x / b))


def _laplace_quantile(p, b: float):
    p = np.asarray(p, dtype=float)
    half = p - 0.5
    return -b * np.sign(half) * np.log1p(-2.0 * np.abs(half))


def cdf(law: NoiseLaw, x):
    """CDF of ``law`` evaluated at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if law.kind == "uniform01":
        out = np.clip(x, 0.0, 1.0)
    elif law.kind == "std_normal":
        out = ndtr(x)
    elif law.kind == "student_t":
        out = _t2_cdf(x) if law.df == 2 else _t3_cdf(x)
    else:
        out = _laplace_cdf(x, law.scale)
    return float(out) if out.ndim == 0 else out


def quantile(law: NoiseLaw, p):
    """Quantile function Q(p) of ``law`` for p strictly inside (0,1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise ValueError("probability must lie strictly inside (0, 1)")
    if law.kind == "uniform01":
        out = p_arr.copy()
    elif law.kind == "std_normal":
        out = ndtri(p_arr)
    elif law.kind == "student_t":
        if law.df == 2:
            out = _t2_quantile(p_arr)
        else:
            out = np.vectorize(_t3_quantile_scalar, otypes=[float])(p_arr)
    else:
        out = _laplace_quantile(p_arr, law.scale)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def sample(law: NoiseLaw, rng: "int | Rng", n: int) -> np.ndarray:
    """Draw ``n`` variates of ``law``; pure function of (law, seed, n).

    Student-t uses the normal/chi-square ratio representation; uniform and
    Laplace use inverse transforms.
    """
    if n < 0:
        raise ValueError(f"sample size must be nonnegative, got {n}")
    gen = as_rng(rng)
    if law.kind == "uniform01":
        return gen.uniform(n)
    if law.kind == "std_normal":
        return np.asarray(gen.standard_normal(n), dtype=float).reshape(n)
    if law.kind == "student_t":
        z = gen.standard_normal(n)
        w = gen.chisquare(law.df, n)
        return np.asarray(z / np.sqrt(w / law.df), dtype=float).reshape(n)
    # Laplace: inverse transform of a uniform draw; nudge 0 away from the
    # endpoint so Q never sees log(0).
    u = np.asarray(gen.uniform(n), dtype=float).reshape(n)
    u[u == 0.0] = np.finfo(float).tiny
    return _laplace_quantile(u, law.scale)

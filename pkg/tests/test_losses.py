import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import central_difference, quadrature_smoothed_loss
from sqrnet.losses import (
    KERNELS,
    LossSpec,
    batch_loss_and_grad,
    kernel_abs_moment,
    kernel_cdf,
    kernel_second_moment,
    pinball_loss,
    pinball_subgrad,
    smoothed_grad,
    smoothed_loss,
)
from sqrnet.rng import Rng

taus = st.sampled_from([0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95])
kernels = st.sampled_from(KERNELS)
bandwidths = st.floats(1e-3, 1.0)
residuals = st.floats(-5.0, 5.0)


class TestPinball:
    def test_symmetric_unit(self):
        assert pinball_loss(1.0, 0.5) == 0.5
        assert pinball_loss(-1.0, 0.5) == 0.5

    def test_quarter(self):
        assert pinball_loss(2.0, 0.25) == 0.5
        assert pinball_loss(-2.0, 0.25) == 1.5

    def test_zero(self):
        assert pinball_loss(0.0, 0.3) == 0.0

    def test_subgrad_tie_resolves_to_tau(self):
        assert pinball_subgrad(0.0, 0.3) == 0.3

    @given(residuals, taus)
    def test_nonnegative(self, u, tau):
        assert pinball_loss(u, tau) >= 0.0


class TestKernelCdf:
    def test_uniform_center(self):
        assert kernel_cdf("uniform", 0.0) == 0.5

    def test_epanechnikov_half(self):
        assert kernel_cdf("epanechnikov", 0.5) == pytest.approx(0.84375, abs=1e-15)

    def test_gaussian_one(self):
        assert kernel_cdf("gaussian", 1.0) == pytest.approx(0.841345, abs=1e-6)

    @pytest.mark.parametrize("kind", KERNELS)
    def test_limits_and_symmetry(self, kind):
        assert kernel_cdf(kind, -50.0) == pytest.approx(0.0, abs=1e-12)
        assert kernel_cdf(kind, 50.0) == pytest.approx(1.0, abs=1e-12)
        for t in (-1.3, -0.4, 0.0, 0.7, 2.1):
            assert kernel_cdf(kind, -t) == pytest.approx(1.0 - kernel_cdf(kind, t),
                                                         abs=1e-12)

    @pytest.mark.parametrize("kind", KERNELS)
    def test_nondecreasing(self, kind):
        grid = np.linspace(-3, 3, 301)
        values = kernel_cdf(kind, grid)
        assert np.all(np.diff(values) >= 0)


class TestSmoothedLossClosedForms:
    def test_gaussian_at_zero(self):
        spec = LossSpec.smoothed(0.5, "gaussian", 1.0)
        assert smoothed_loss(0.0, spec) == pytest.approx(1.0 / math.sqrt(2 * math.pi),
                                                         abs=1e-12)

    def test_uniform_at_zero(self):
        spec = LossSpec.smoothed(0.5, "uniform", 0.4)
        assert smoothed_loss(0.0, spec) == pytest.approx(0.1, abs=1e-15)

    def test_uniform_outside_support_exact(self):
        spec = LossSpec.smoothed(0.3, "uniform", 0.1)
        assert smoothed_loss(0.5, spec) == pinball_loss(0.5, 0.3) == pytest.approx(0.15)

    @pytest.mark.parametrize("kind", KERNELS)
    def test_matches_quadrature(self, kind):
        rng = Rng(314).split(hash(kind) % 1000)
        for _ in range(60):
            u = float(rng.uniform(low=-5, high=5))
            tau = float(rng.uniform(low=0.05, high=0.95))
            h = float(rng.uniform(low=1e-3, high=1.0))
            spec = LossSpec.smoothed(tau, kind, h)
            target = quadrature_smoothed_loss(u, tau, kind, h)
            assert abs(smoothed_loss(u, spec) - target) <= 1e-8 * max(1.0, abs(u))

    @given(residuals, taus, kernels, bandwidths)
    @settings(max_examples=200)
    def test_dominates_pinball_within_band(self, u, tau, kind, h):
        spec = LossSpec.smoothed(tau, kind, h)
        smooth = smoothed_loss(u, spec)
        rough = pinball_loss(u, tau)
        assert smooth >= rough - 1e-12
        assert smooth - rough <= h * kernel_abs_moment(kind) + 1e-12

    @given(taus, kernels, bandwidths, residuals)
    @settings(max_examples=200)
    def test_compact_support_equality(self, tau, kind, h, u):
        if kind == "gaussian" or abs(u) <= h:
            return
        spec = LossSpec.smoothed(tau, kind, h)
        assert smoothed_loss(u, spec) == pytest.approx(pinball_loss(u, tau), abs=1e-14)


class TestSmoothedGrad:
    def test_gaussian_symmetric_zero(self):
        spec = LossSpec.smoothed(0.5, "gaussian", 0.37)
        assert smoothed_grad(0.0, spec) == pytest.approx(0.0, abs=1e-15)

    def test_uniform_value(self):
        spec = LossSpec.smoothed(0.5, "uniform", 0.2)
        assert smoothed_grad(0.1, spec) == pytest.approx(0.25, abs=1e-15)

    def test_epanechnikov_support_edge(self):
        spec = LossSpec.smoothed(0.25, "epanechnikov", 1.0)
        assert smoothed_grad(1.0, spec) == pytest.approx(0.25, abs=1e-15)

    @pytest.mark.parametrize("kind", KERNELS)
    def test_matches_central_difference(self, kind):
        rng = Rng(99).split(hash(kind) % 1000)
        for _ in range(60):
            u = float(rng.uniform(low=-5, high=5))
            tau = float(rng.uniform(low=0.05, high=0.95))
            h = float(rng.uniform(low=1e-3, high=1.0))
            spec = LossSpec.smoothed(tau, kind, h)
            step = 1e-6 * max(1.0, abs(u))
            fd = central_difference(lambda x: smoothed_loss(x, spec), u, step)
            assert abs(smoothed_grad(u, spec) - fd) <= 1e-6

    @given(taus, kernels, bandwidths, residuals, residuals)
    @settings(max_examples=200)
    def test_monotone_and_bounded(self, tau, kind, h, u1, u2):
        spec = LossSpec.smoothed(tau, kind, h)
        lo, hi = min(u1, u2), max(u1, u2)
        g_lo, g_hi = smoothed_grad(lo, spec), smoothed_grad(hi, spec)
        assert g_lo <= g_hi + 1e-12
        for g in (g_lo, g_hi):
            assert tau - 1.0 - 1e-12 <= g <= tau + 1e-12

    @pytest.mark.parametrize("kind", KERNELS)
    def test_limits(self, kind):
        spec = LossSpec.smoothed(0.3, kind, 0.5)
        assert smoothed_grad(1e6, spec) == pytest.approx(0.3, abs=1e-9)
        assert smoothed_grad(-1e6, spec) == pytest.approx(-0.7, abs=1e-9)


class TestShrinkingBandwidth:
    @pytest.mark.parametrize("kind", KERNELS)
    def test_sup_gap_strictly_decreases(self, kind):
        grid = np.linspace(-1, 1, 801)
        gaps = []
        for h in (0.4, 0.2, 0.1):
            spec = LossSpec.smoothed(0.5, kind, h)
            gaps.append(np.max(np.abs(smoothed_loss(grid, spec)
                                      - pinball_loss(grid, 0.5))))
        assert gaps[0] > gaps[1] > gaps[2]


class TestBatch:
    def test_mean_loss(self):
        loss, _ = batch_loss_and_grad(np.array([1.0, -1.0]), LossSpec.pinball(0.5))
        assert loss == pytest.approx(0.5)

    def test_zero_residuals_symmetric_kernels(self):
        for kind in KERNELS:
            spec = LossSpec.smoothed(0.3, kind, 0.25)
            loss, grad = batch_loss_and_grad(np.zeros(4), spec)
            assert loss > 0
            np.testing.assert_allclose(grad, np.full(4, (0.3 - 0.5) / 4), atol=1e-15)

    def test_brute_force_average(self):
        rng = Rng(1234)
        r = np.asarray(rng.uniform(100, low=-3, high=3))
        spec = LossSpec.smoothed(0.25, "epanechnikov", 0.3)
        loss, grad = batch_loss_and_grad(r, spec)
        by_hand = sum(smoothed_loss(float(v), spec) for v in r) / 100
        assert loss == pytest.approx(by_hand, abs=1e-12)
        for i in range(100):
            assert grad[i] == pytest.approx(smoothed_grad(float(r[i]), spec) / 100,
                                            abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            batch_loss_and_grad(np.array([]), LossSpec.pinball(0.5))


class TestLossSpecValidation:
    def test_tau_bounds(self):
        with pytest.raises(ValueError):
            LossSpec.pinball(0.0)
        with pytest.raises(ValueError):
            LossSpec.pinball(1.0)

    def test_bandwidth_required_with_kernel(self):
        with pytest.raises(ValueError):
            LossSpec(tau=0.5, kernel="gaussian")
        with pytest.raises(ValueError):
            LossSpec(tau=0.5, kernel="gaussian", bandwidth=0.0)

    def test_bandwidth_without_kernel_rejected(self):
        with pytest.raises(ValueError):
            LossSpec(tau=0.5, bandwidth=0.1)

    def test_unknown_kernel(self):
        with pytest.raises(ValueError):
            LossSpec(tau=0.5, kernel="triangle", bandwidth=0.1)

    def test_second_moment_metadata(self):
        assert kernel_second_moment("gaussian") == 1.0
        assert kernel_second_moment("uniform") == pytest.approx(1 / 3)
        assert kernel_second_moment("epanechnikov") == pytest.approx(0.2)

import math

import numpy as np
import pytest

from sqrnet.network import Architecture, GradientSet, MlpModel
from sqrnet.optimizer import EarlyStop, PlateauScheduler, SgdState, sgd_step
from sqrnet.rng import Rng


def _scalar_model(value: float) -> MlpModel:
    model = MlpModel.init(Architecture(1, (), 1), Rng(0))
    model.weights[0][...] = value
    model.biases[0][...] = 0.0
    return model


def _grads_like(model, weight_grad: float) -> GradientSet:
    g = GradientSet.zeros_like(model)
    g.weights[0][...] = weight_grad
    return g


class TestSgdStep:
    def test_zero_gradient_keeps_model_velocity_decays(self):
        model = _scalar_model(1.0)
        state = SgdState.zeros(model)
        state.velocities.weights[0][...] = 2.0
        sgd_step(model, _grads_like(model, 0.0), state, lr=0.1)
        assert model.weights[0][0, 0] == pytest.approx(1.0 - 0.1 * 0.9 * 1.8)
        assert state.velocities.weights[0][0, 0] == pytest.approx(1.8)

    def test_quadratic_converges(self):
        # loss = theta^2/2, gradient = theta.
        theta, v = 1.0, 0.0
        for _ in range(100):
            g = theta
            v = 0.9 * v + g
            theta -= 0.1 * (g + 0.9 * v)
        reference = theta

        model = _scalar_model(1.0)
        state = SgdState.zeros(model)
        for _ in range(100):
            g = model.weights[0][0, 0]
            sgd_step(model, _grads_like(model, g), state, lr=0.1)
        assert model.weights[0][0, 0] == pytest.approx(reference, abs=1e-15)
        assert abs(model.weights[0][0, 0]) < 1e-3

    def test_zero_momentum_is_vanilla(self):
        model = _scalar_model(2.0)
        state = SgdState.zeros(model, momentum=0.0)
        sgd_step(model, _grads_like(model, 0.5), state, lr=0.2)
        assert model.weights[0][0, 0] == pytest.approx(2.0 - 0.2 * 0.5, abs=0)

    def test_equivalent_to_classical_two_sequence_form(self):
        # Classical lookahead form: w <- mu*w - lr*grad(phi + mu*w);
        # phi <- phi + w. Our sequence theta equals phi + mu*w each step.
        mu, lr = 0.9, 0.05
        grad = lambda x: 0.7 * x  # scalar quadratic

        phi, w = 1.3, 0.0
        model = _scalar_model(1.3)
        state = SgdState.zeros(model, momentum=mu)
        for _ in range(50):
            g = grad(phi + mu * w)
            w = mu * w - lr * g
            phi = phi + w
            theta = model.weights[0][0, 0]
            sgd_step(model, _grads_like(model, grad(theta)), state, lr=lr)
            assert model.weights[0][0, 0] == pytest.approx(phi + mu * w, abs=1e-12)

    def test_rejects_non_finite_gradient(self):
        model = _scalar_model(1.0)
        state = SgdState.zeros(model)
        with pytest.raises(FloatingPointError):
            sgd_step(model, _grads_like(model, math.nan), state, lr=0.1)

    def test_rejects_bad_lr(self):
        model = _scalar_model(1.0)
        state = SgdState.zeros(model)
        with pytest.raises(ValueError):
            sgd_step(model, _grads_like(model, 0.1), state, lr=0.0)


class TestPlateauScheduler:
    def test_improving_losses_keep_lr(self):
        sched = PlateauScheduler()
        for epoch in range(20):
            lr = sched.update(1.0 - 0.01 * epoch)
        assert lr == 0.1

    def test_halves_at_epoch_seven(self):
        sched = PlateauScheduler()
        lrs = [sched.update(1.0)]           # epoch 1 improves on +inf
        lrs += [sched.update(1.0) for _ in range(6)]  # epochs 2..7 flat
        assert lrs[:6] == [0.1] * 6
        assert lrs[6] == 0.05

    def test_quarter_after_thirteen_flat(self):
        sched = PlateauScheduler()
        lrs = [sched.update(1.0) for _ in range(13)]
        assert lrs[-1] == 0.025

    def test_exact_halvings_only(self):
        sched = PlateauScheduler()
        rng = Rng(5)
        seen = set()
        for loss in rng.uniform(200, low=0.5, high=1.5):
            seen.add(sched.update(float(loss)))
        allowed = {0.1 * 0.5**k for k in range(80)}
        assert seen <= allowed

    def test_lr_nonincreasing(self):
        sched = PlateauScheduler()
        rng = Rng(6)
        prev = sched.lr
        for loss in rng.uniform(100, low=0.5, high=1.5):
            lr = sched.update(float(loss))
            assert lr <= prev
            prev = lr

    def test_tiny_relative_wiggle_is_not_improvement(self):
        sched = PlateauScheduler()
        sched.update(1.0)
        for _ in range(6):
            lr = sched.update(1.0 - 1e-12)
        assert lr == 0.05

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PlateauScheduler().update(math.nan)


class TestEarlyStop:
    def test_high_lr_never_stops(self):
        stop = EarlyStop()
        assert not any(stop.update(0.1, 1.0) for _ in range(50))

    def test_improving_never_stops(self):
        stop = EarlyStop()
        assert not any(stop.update(1e-5, 1.0 - 0.01 * k) for k in range(50))

    def test_low_lr_and_flat_stops(self):
        stop = EarlyStop()
        stop.update(1e-5, 1.0)
        results = [stop.update(1e-5, 1.0) for _ in range(5)]
        assert results == [False, False, False, False, True]

    def test_requires_both_conditions(self):
        stop = EarlyStop()
        stop.update(0.1, 1.0)
        # Flat at a high lr: streak grows but never fires.
        for _ in range(10):
            assert not stop.update(0.1, 1.0)
        # Dropping lr with the streak already long fires immediately.
        assert stop.update(1e-5, 1.0)

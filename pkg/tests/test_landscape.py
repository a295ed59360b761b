import math

import numpy as np
import pytest

from sqrnet.landscape import (
    LandscapeSpec,
    random_direction,
    read_surface_csv,
    surface,
    write_surface_csv,
)
from sqrnet.losses import LossSpec, smoothed_loss
from sqrnet.network import Architecture, GradientSet, MlpModel
from sqrnet.rng import Rng
from sqrnet.scenarios import Dataset, generate, get_scenario


def _trained_like_model(seed=3):
    arch = Architecture(2, (5, 5), 1)
    model = MlpModel.init(arch, Rng(seed))
    # Give the biases nonzero values so bias normalization is exercised.
    for b in model.biases:
        b[...] = np.asarray(Rng(seed + 1).uniform(b.shape, low=-0.5, high=0.5))
    return model


class TestRandomDirection:
    def test_row_norms_match_model(self):
        model = _trained_like_model()
        d = random_direction(model, Rng(0))
        for dw, w in zip(d.weights, model.weights):
            np.testing.assert_allclose(np.linalg.norm(dw, axis=1),
                                       np.linalg.norm(w, axis=1), atol=1e-12)
        for db, b in zip(d.biases, model.biases):
            np.testing.assert_allclose(np.abs(db), np.abs(b), atol=1e-12)

    def test_zero_rows_stay_zero(self):
        model = _trained_like_model()
        model.weights[1][2, :] = 0.0
        model.biases[0][1] = 0.0
        d = random_direction(model, Rng(5))
        assert np.all(d.weights[1][2] == 0.0)
        assert d.biases[0][1] == 0.0

    def test_same_seed_shares_raw_directions(self):
        # Two same-shaped models, same seed: the directions differ only by
        # the per-row rescale, so unit rows coincide.
        m1 = _trained_like_model(seed=3)
        m2 = _trained_like_model(seed=8)
        d1 = random_direction(m1, Rng(42))
        d2 = random_direction(m2, Rng(42))
        for a, b in zip(d1.weights, d2.weights):
            na = np.linalg.norm(a, axis=1, keepdims=True)
            nb = np.linalg.norm(b, axis=1, keepdims=True)
            np.testing.assert_allclose(a / na, b / nb, atol=1e-12)

    def test_exclude_biases_mode(self):
        model = _trained_like_model()
        d = random_direction(model, Rng(1), include_biases=False)
        for db in d.biases:
            assert np.all(db == 0.0)


class TestSurface:
    def _spec(self, dataset, resolution=5, **kw):
        return LandscapeSpec(dataset=dataset,
                             loss_spec=LossSpec.smoothed(0.5, "gaussian", 0.1),
                             resolution=resolution, **kw)

    def test_zero_directions_constant_grid(self):
        ds = generate(get_scenario("S1"), 50, Rng(2))
        model = _trained_like_model()
        zero = GradientSet.zeros_like(model)
        spec = self._spec(ds)
        alphas, betas, grid = surface(model, zero, zero, spec)
        assert np.all(grid == grid[0, 0])

    def test_center_cell_is_base_loss_bitwise(self):
        ds = generate(get_scenario("S1"), 40, Rng(3))
        model = _trained_like_model()
        spec = self._spec(ds)
        d1 = random_direction(model, Rng(0))
        d2 = random_direction(model, Rng(1))
        alphas, betas, grid = surface(model, d1, d2, spec)
        base = float(np.mean(smoothed_loss(ds.y - model.predict(ds.X)[:, 0],
                                           spec.loss_spec)))
        i = spec.resolution // 2
        assert alphas[i] == 0.0 and betas[i] == 0.0
        assert grid[i, i] == base

    def test_model_not_mutated(self):
        ds = generate(get_scenario("S1"), 30, Rng(4))
        model = _trained_like_model()
        before = [arr.copy() for arr in model.params()]
        spec = self._spec(ds)
        surface(model, random_direction(model, Rng(0)),
                random_direction(model, Rng(1)), spec)
        for arr, orig in zip(model.params(), before):
            np.testing.assert_array_equal(arr, orig)

    def test_symmetric_toy_surface(self):
        # Intercept-only model at the median of symmetric responses, with
        # tau = 0.5: the loss is even in the bias perturbation, so the
        # surface is symmetric under (alpha, beta) -> (-alpha, -beta).
        y = np.concatenate([np.linspace(-2, -0.1, 20), np.linspace(0.1, 2, 20)])
        ds = Dataset(np.zeros((40, 1)), y)
        model = MlpModel.init(Architecture(1, (), 1), Rng(0))
        model.weights[0][...] = 0.0
        model.biases[0][...] = 1.0  # so bias directions are nonzero
        # Center the surface at the optimum by shifting responses: bias=1,
        # median(y + 1 - 1) -> perturbations around the symmetric point.
        ds = Dataset(ds.X, y + 1.0)
        spec = self._spec(ds, resolution=7)
        d1 = random_direction(model, Rng(10))
        d2 = random_direction(model, Rng(11))
        alphas, betas, grid = surface(model, d1, d2, spec)
        np.testing.assert_allclose(grid, grid[::-1, ::-1], atol=1e-10)

    def test_non_finite_becomes_inf_sentinel(self):
        ds = generate(get_scenario("S1"), 20, Rng(5))
        model = _trained_like_model()
        huge = GradientSet(
            [np.full_like(w, 1e200) for w in model.weights],
            [np.full_like(b, 1e200) for b in model.biases],
        )
        spec = self._spec(ds, resolution=3)
        with np.errstate(over="ignore", invalid="ignore"):
            _, _, grid = surface(model, huge, huge, spec)
        assert math.isinf(grid[0, 0]) or math.isinf(grid[-1, -1])

    def test_resolution_validation(self):
        ds = generate(get_scenario("S1"), 10, Rng(0))
        with pytest.raises(ValueError):
            LandscapeSpec(dataset=ds, loss_spec=LossSpec.pinball(0.5), resolution=1)
        with pytest.raises(ValueError):
            LandscapeSpec(dataset=ds, loss_spec=LossSpec.pinball(0.5),
                          alpha_range=(0.5, 1.0))


class TestSurfaceCsv:
    def test_round_trip_with_inf(self, tmp_path):
        alphas = np.array([-1.0, 0.0, 1.0])
        betas = np.array([-0.5, 0.0, 0.5])
        grid = np.array([[1.0, 2.0, 3.0],
                         [4.0, math.inf, 6.0],
                         [7.0, 8.0, 9.0]])
        path = tmp_path / "surface.csv"
        write_surface_csv(path, alphas, betas, grid, header_comment="config: {}")
        text = path.read_text()
        assert "inf" in text
        a2, b2, g2 = read_surface_csv(path)
        np.testing.assert_array_equal(a2, alphas)
        np.testing.assert_array_equal(b2, betas)
        np.testing.assert_array_equal(g2, grid)

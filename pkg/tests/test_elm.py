import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elm_pi import elm
from elm_pi.data import GeneratorSpec, apply_standardizer, fit_standardizer, synth
from elm_pi.elm import HiddenLayer, NeuronSpec, parse_specs
from elm_pi.errors import ConfigurationError, EmptyDataError, ShapeError

TANH10 = parse_specs("linear:1,tanh:10")


def _zero_layer(d, kind, L):
    return HiddenLayer(np.zeros((d + 1, L)), (NeuronSpec(kind, L),), 0, d)


def _synthetic(n=1000, seed=0, sigma="widening"):
    ds, truth = synth(GeneratorSpec(n=n, seed=seed, sigma=sigma))
    return ds.X, ds.y, truth


class TestHiddenLayer:
    def test_deterministic(self):
        specs = parse_specs("tanh:10,linear:1")
        a = elm.init_hidden_layer(3, specs, 7)
        b = elm.init_hidden_layer(3, specs, 7)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.kinds == b.kinds == ("tanh",) * 10 + ("linear",)

    def test_different_seeds_differ(self):
        a = elm.init_hidden_layer(3, TANH10, 1)
        b = elm.init_hidden_layer(3, TANH10, 2)
        assert not np.array_equal(a.weights, b.weights)

    def test_weights_frozen(self):
        layer = elm.init_hidden_layer(2, TANH10, 0)
        with pytest.raises(ValueError):
            layer.weights[0, 0] = 1.0

    def test_linear_neurons_are_affine(self, rng):
        layer = elm.init_hidden_layer(2, parse_specs("linear:2"), 3)
        X = rng.standard_normal((5, 2))
        H = elm.hidden_transform(layer, X)
        np.testing.assert_allclose(H, X @ layer.weights[:2] + layer.weights[2], rtol=1e-15)

    def test_skin_layer_width(self):
        layer = elm.init_hidden_layer(147, parse_specs("linear:147,sigmoid:200"), 0)
        assert layer.width == 347
        assert layer.weights.shape == (148, 347)

    def test_weight_scale(self):
        layer = elm.init_hidden_layer(99, parse_specs("tanh:400"), 0)
        assert layer.weights.std() == pytest.approx(0.1, rel=0.02)

    def test_empty_specs(self):
        with pytest.raises(ConfigurationError):
            elm.init_hidden_layer(3, [], 0)

    @pytest.mark.parametrize("text", ["", "relu:3", "tanh:0", "tanh", "tanh:x"])
    def test_bad_specs(self, text):
        with pytest.raises(ConfigurationError):
            parse_specs(text)


class TestHiddenTransform:
    def test_zero_weights_tanh(self, rng):
        H = elm.hidden_transform(_zero_layer(3, "tanh", 4), rng.standard_normal((6, 3)))
        np.testing.assert_array_equal(H, 0.0)

    def test_zero_weights_sigmoid(self, rng):
        H = elm.hidden_transform(_zero_layer(3, "sigmoid", 4), rng.standard_normal((6, 3)))
        np.testing.assert_array_equal(H, 0.5)

    def test_scalar_tanh(self):
        layer = HiddenLayer(np.array([[1.0], [0.0]]), (NeuronSpec("tanh", 1),), 0, 1)
        H = elm.hidden_transform(layer, [[2.0]])
        assert H[0, 0] == pytest.approx(0.96403, abs=1e-5)
        assert H[0, 0] == pytest.approx(math.tanh(2.0), rel=1e-15)

    def test_sigmoid_matches_logistic(self, rng):
        W = rng.standard_normal((3, 5))
        layer = HiddenLayer(W, (NeuronSpec("sigmoid", 5),), 0, 2)
        X = rng.standard_normal((7, 2)) * 5
        Z = X @ W[:2] + W[2]
        np.testing.assert_allclose(elm.hidden_transform(layer, X), 1 / (1 + np.exp(-Z)), rtol=1e-14)

    def test_bias_row(self):
        W = np.array([[0.0], [0.7]])
        layer = HiddenLayer(W, (NeuronSpec("linear", 1),), 0, 1)
        np.testing.assert_allclose(elm.hidden_transform(layer, [[5.0], [-2.0]]), [[0.7], [0.7]])

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            elm.hidden_transform(elm.init_hidden_layer(3, TANH10, 0), np.ones((4, 2)))


class TestTrainPredict:
    def test_zero_targets(self, rng):
        X = rng.standard_normal((100, 2))
        model = elm.train(X, np.zeros(100), elm.init_hidden_layer(2, TANH10, 0), 1e-3)
        assert np.abs(model.beta).max() < 1e-12

    @pytest.mark.parametrize("batch_rows", [1, 7, 100])
    def test_batch_invariance(self, batch_rows):
        X, y, _ = _synthetic(1000)
        layer = elm.init_hidden_layer(1, TANH10, 0)
        ref = elm.train(X, y, layer, 1e-2, batch_rows=1000)
        m = elm.train(X, y, layer, 1e-2, batch_rows=batch_rows)
        assert np.linalg.norm(m.beta - ref.beta) <= 1e-10 * np.linalg.norm(ref.beta)
        p_ref = elm.predict(ref, X, batch_rows=1000)
        p = elm.predict(m, X, batch_rows=batch_rows)
        assert np.linalg.norm(p - p_ref) <= 1e-10 * np.linalg.norm(p_ref)

    def test_retained_inverse(self):
        X, y, _ = _synthetic(300)
        layer = elm.init_hidden_layer(1, TANH10, 0)
        m = elm.train(X, y, layer, 0.1)
        H = elm.hidden_transform(layer, X)
        np.testing.assert_array_equal(m.P, m.P.T)
        assert np.abs((H.T @ H + 0.1 * np.eye(11)) @ m.P - np.eye(11)).max() < 1e-8

    def test_fits_artificial_curve(self):
        X, y, _ = _synthetic(1000, seed=1)
        Xt, yt, truth = _synthetic(5000, seed=2)
        std = fit_standardizer(X)
        layer = elm.init_hidden_layer(1, TANH10, 0)
        gamma, _ = elm.select_gamma(apply_standardizer(std, X), y, layer, [1e-6, 1e-4, 1e-2, 1])
        m = elm.train(apply_standardizer(std, X), y, layer, gamma)
        pred = elm.predict(m, apply_standardizer(std, Xt))
        rmse = np.sqrt(np.mean((pred - yt) ** 2))
        assert rmse < np.std(yt)
        # close to the irreducible noise level
        assert rmse < 1.1 * np.sqrt(np.mean(truth.sigma ** 2))

    def test_zero_beta_predicts_zero(self, rng):
        layer = elm.init_hidden_layer(3, TANH10, 0)
        m = elm.ElmModel(layer, np.zeros(11), 1.0, np.eye(11))
        np.testing.assert_array_equal(elm.predict(m, rng.standard_normal((9, 3))), 0.0)

    def test_exact_line(self):
        # one linear neuron without bias reproduces y = 2x exactly
        layer = HiddenLayer(np.array([[1.0], [0.0]]), (NeuronSpec("linear", 1),), 0, 1)
        x = np.linspace(-3, 3, 50)[:, None]
        m = elm.train(x, 2 * x[:, 0], layer, 0.0)
        np.testing.assert_allclose(elm.predict(m, [[0.3], [-7.0]]), [0.6, -14.0], atol=1e-6)

    def test_empty(self):
        with pytest.raises(EmptyDataError):
            elm.train(np.empty((0, 2)), np.empty(0), elm.init_hidden_layer(2, TANH10, 0), 1.0)

    def test_predict_shape_error(self):
        X, y, _ = _synthetic(50)
        m = elm.train(X, y, elm.init_hidden_layer(1, TANH10, 0), 1.0)
        with pytest.raises(ShapeError):
            elm.predict(m, np.ones((3, 2)))

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1e-6, 1e3), st.floats(1.01, 100.0), st.integers(0, 1000))
    def test_regularization_monotone(self, g1, factor, seed):
        r = np.random.default_rng(seed)
        X, y = r.standard_normal((60, 2)), r.standard_normal(60)
        layer = elm.init_hidden_layer(2, TANH10, seed)
        b1 = elm.train(X, y, layer, g1).beta
        b2 = elm.train(X, y, layer, g1 * factor).beta
        assert np.linalg.norm(b1) >= np.linalg.norm(b2) * (1 - 1e-12)

    def test_seed_stability_of_large_layer(self):
        X, y, _ = _synthetic(2000, seed=3)
        Xt, yt, _ = _synthetic(2000, seed=4)
        std = fit_standardizer(X)
        Z, Zt = apply_standardizer(std, X), apply_standardizer(std, Xt)
        rmse = []
        for seed in range(10):
            layer = elm.init_hidden_layer(1, parse_specs("linear:1,tanh:499"), seed)
            g, _ = elm.select_gamma(Z, y, layer, 10.0 ** np.arange(-4, 3), 0.2, seed)
            rmse.append(np.sqrt(np.mean((elm.predict(elm.train(Z, y, layer, g), Zt) - yt) ** 2)))
        assert np.std(rmse) / np.mean(rmse) < 0.10


class TestSelectGamma:
    def test_singleton(self, rng):
        g, _ = elm.select_gamma(rng.standard_normal((5, 2)), rng.standard_normal(5),
                                elm.init_hidden_layer(2, TANH10, 0), [0.37])
        assert g == 0.37

    def test_pure_noise_picks_max(self, rng):
        X, y = rng.standard_normal((100, 3)), rng.standard_normal(100)
        layer = elm.init_hidden_layer(3, parse_specs("tanh:60"), 0)
        grid = 10.0 ** np.arange(-6, 7)
        g, mse = elm.select_gamma(X, y, layer, grid, 0.3, seed=0)
        assert g == 1e6
        assert mse.shape == grid.shape

    def test_ties_go_to_larger_gamma(self, rng):
        # both gammas give beta ~ 0 for zero targets, so validation MSE ties exactly
        X, y = rng.standard_normal((40, 2)), np.zeros(40)
        g, mse = elm.select_gamma(X, y, elm.init_hidden_layer(2, TANH10, 0), [5.0, 1.0, 3.0])
        assert mse[0] == mse[1] == mse[2]
        assert g == 5.0

    def test_smooth_data_has_interior_minimum(self):
        ds, _ = synth(GeneratorSpec(sigma=0.05, n=500, seed=0))
        Z = apply_standardizer(fit_standardizer(ds.X), ds.X)
        grid = 10.0 ** np.arange(-6, 4)
        _, mse = elm.select_gamma(Z, ds.y, elm.init_hidden_layer(1, TANH10, 0), grid)
        assert np.any(np.diff(mse) < 0) or np.argmin(mse) == 0
        assert mse[-1] > 10 * mse.min()

    def test_deterministic(self, rng):
        X, y = rng.standard_normal((80, 2)), rng.standard_normal(80)
        layer = elm.init_hidden_layer(2, TANH10, 0)
        a = elm.select_gamma(X, y, layer, [1e-3, 1, 1e3], 0.25, 9)
        b = elm.select_gamma(X, y, layer, [1e-3, 1, 1e3], 0.25, 9)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1], b[1])

    @pytest.mark.parametrize("grid,frac,n", [([], 0.2, 10), ([1.0, -1.0], 0.2, 10),
                                             ([1.0, 2.0], 0.01, 10), ([1.0, 2.0], 1.0, 10)])
    def test_configuration_errors(self, grid, frac, n):
        with pytest.raises(ConfigurationError):
            elm.select_gamma(np.ones((n, 1)), np.ones(n), elm.init_hidden_layer(1, TANH10, 0), grid, frac)

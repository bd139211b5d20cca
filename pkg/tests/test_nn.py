import numpy as np
import pytest

from cursor_attn.errors import InvalidValueError, ShapeMismatchError
from cursor_attn.nn import (
    AdamState,
    ModelSpec,
    adam_step,
    init_model,
    load_model,
    save_model,
)
from cursor_attn.nn.layers import Conv2D, Dropout, MaxPool2

SEQ = (5, 2)


def spec(arch="gru", n=32, q=0.2, seed=1, shape=SEQ):
    if arch == "smallconv":
        return ModelSpec(arch=arch, input_shape=shape, seed=seed)
    return ModelSpec(arch=arch, input_shape=shape, hidden_n=n, drop_rate=q, seed=seed)


class TestInit:
    def test_gru_parameter_count(self):
        model = init_model(spec("gru", n=32))
        cell = dict(model.layers)["cell"]
        count = sum(a.size for a in cell.params.values())
        assert count == 3 * ((2 + 32) * 32 + 32) == 3360
        head = dict(model.layers)["head"]
        assert sum(a.size for a in head.params.values()) == 32 + 1

    def test_lstm_parameter_count(self):
        model = init_model(spec("lstm", n=16))
        cell = dict(model.layers)["cell"]
        assert sum(a.size for a in cell.params.values()) == 4 * ((2 + 16) * 16 + 16)

    def test_same_seed_bit_identical(self):
        a = init_model(spec(seed=7)).params()
        b = init_model(spec(seed=7)).params()
        for k in a:
            np.testing.assert_array_equal(a[k], b[k])

    def test_different_seed_differs(self):
        a = init_model(spec(seed=7)).params()
        b = init_model(spec(seed=8)).params()
        assert any((a[k] != b[k]).any() for k in a)

    def test_biases_zero(self):
        model = init_model(spec("lstm"))
        for name, arr in model.params().items():
            if name.endswith(".b"):
                assert (arr == 0.0).all()

    def test_bad_hidden_n(self):
        with pytest.raises(InvalidValueError):
            init_model(spec(n=17))

    def test_bad_drop_rate(self):
        with pytest.raises(InvalidValueError):
            init_model(spec(q=0.35))

    def test_bad_arch(self):
        with pytest.raises(InvalidValueError):
            init_model(ModelSpec(arch="transformer", input_shape=SEQ, hidden_n=16))

    def test_grid_floats_tolerated(self):
        init_model(spec(q=0.30000000001))  # representation noise on the grid


class TestForward:
    def test_zero_params_give_half(self):
        model = init_model(spec())
        model.set_params({k: np.zeros_like(v) for k, v in model.params().items()})
        p = model.forward(np.random.default_rng(0).normal(size=(4, 5, 2)))
        np.testing.assert_array_equal(p, 0.5)

    def test_infer_deterministic(self):
        model = init_model(spec())
        x = np.random.default_rng(1).normal(size=(3, 5, 2))
        np.testing.assert_array_equal(model.forward(x), model.forward(x))

    def test_output_strictly_inside_unit_interval(self):
        for arch in ("simplernn", "lstm", "blstm", "gru"):
            model = init_model(spec(arch))
            x = np.random.default_rng(2).normal(size=(8, 5, 2)) * 10
            p = model.forward(x)
            assert (p > 0.0).all() and (p < 1.0).all()

    def test_blstm_readout_width(self):
        model = init_model(spec("blstm", n=24))
        head = dict(model.layers)["head"]
        assert head.params["W"].shape == (48, 1)

    def test_blstm_reversal_swaps_halves(self):
        model = init_model(spec("blstm", n=16))
        cell = dict(model.layers)["cell"]
        # tie the two directions so the swap is observable
        cell.bwd.params["W"][...] = cell.fwd.params["W"]
        cell.bwd.params["b"][...] = cell.fwd.params["b"]
        x = np.random.default_rng(3).normal(size=(4, 5, 2))
        fwd_out, _ = cell.forward(x)
        rev_out, _ = cell.forward(x[:, ::-1, :])
        np.testing.assert_allclose(fwd_out[:, :16], rev_out[:, 16:], atol=1e-12)
        np.testing.assert_allclose(fwd_out[:, 16:], rev_out[:, :16], atol=1e-12)

    def test_shape_mismatch(self):
        model = init_model(spec())
        with pytest.raises(ShapeMismatchError):
            model.forward(np.zeros((2, 7, 2)))

    def test_chunked_inference_matches(self):
        model = init_model(spec())
        x = np.random.default_rng(4).normal(size=(130, 5, 2))
        np.testing.assert_allclose(model.forward(x), np.concatenate([model.forward(x[:65]), model.forward(x[65:])]), atol=1e-12)


class TestConvPieces:
    def test_hand_computed_cross_correlation(self):
        rng = np.random.default_rng(0)
        conv = Conv2D(rng, 3, 3, 1, 1)
        kernel = np.arange(9, dtype=float).reshape(3, 3)
        conv.params["K"] = kernel.reshape(3, 3, 1, 1)
        conv.params["b"] = np.zeros(1)
        x = rng.normal(size=(1, 5, 5, 1))
        out, _ = conv.forward(x)
        expected = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                expected[i, j] = np.sum(x[0, i : i + 3, j : j + 3, 0] * kernel)
        np.testing.assert_allclose(out[0, :, :, 0], expected, atol=1e-12)

    def test_maxpool_forward_and_routing(self):
        pool = MaxPool2()
        x = np.zeros((1, 4, 4, 1))
        x[0, :, :, 0] = [[1, 2, 0, 0], [3, 4, 0, 0], [0, 0, 5, 6], [0, 0, 8, 7]]
        y, cache = pool.forward(x)
        np.testing.assert_array_equal(y[0, :, :, 0], [[4, 0], [0, 8]])
        dx, _ = pool.backward(np.ones_like(y), cache)
        assert dx[0, 1, 1, 0] == 1.0  # the 4
        assert dx[0, 3, 2, 0] == 1.0  # the 8
        assert dx.sum() == 4.0

    def test_maxpool_odd_edges_dropped(self):
        pool = MaxPool2()
        x = np.random.default_rng(1).normal(size=(2, 5, 7, 3))
        y, cache = pool.forward(x)
        assert y.shape == (2, 2, 3, 3)
        dx, _ = pool.backward(np.ones_like(y), cache)
        assert dx.shape == x.shape
        assert (dx[:, 4, :, :] == 0).all() and (dx[:, :, 6, :] == 0).all()

    def test_smallconv_shapes(self):
        model = init_model(spec("smallconv", shape=(90, 128, 3)))
        x = np.random.default_rng(2).normal(size=(2, 90, 128, 3))
        p = model.forward(x)
        assert p.shape == (2,)


class TestLoss:
    def test_half_probability_gives_ln2(self):
        model = init_model(spec())
        model.set_params({k: np.zeros_like(v) for k, v in model.params().items()})
        x = np.random.default_rng(0).normal(size=(6, 5, 2))
        y = np.array([0, 1, 0, 1, 1, 0], dtype=float)
        loss, _ = model.loss_and_grads(x, y, train=False)
        assert abs(loss - np.log(2.0)) < 1e-12

    def test_clamp_keeps_loss_finite(self):
        model = init_model(spec())
        params = model.params()
        huge = {k: np.zeros_like(v) for k, v in params.items()}
        huge["head.b"] = np.array([1000.0])
        model.set_params(huge)
        x = np.random.default_rng(0).normal(size=(4, 5, 2))
        loss_correct, _ = model.loss_and_grads(x, np.ones(4), train=False)
        loss_wrong, _ = model.loss_and_grads(x, np.zeros(4), train=False)
        assert np.isfinite(loss_correct) and loss_correct < 1e-6
        assert np.isfinite(loss_wrong)

    def test_label_shape_mismatch(self):
        model = init_model(spec())
        with pytest.raises(ShapeMismatchError):
            model.loss_and_grads(np.zeros((3, 5, 2)), np.zeros(4))


class TestDropout:
    def test_inverted_dropout_expectation(self):
        layer = Dropout(0.4)
        x = np.linspace(1.0, 2.0, 32)[None, :]
        rng = np.random.default_rng(0)
        total = np.zeros_like(x)
        draws = 10_000
        for _ in range(draws):
            out, _ = layer.forward(x, train=True, rng=rng)
            total += out
        estimate = total / draws
        assert np.linalg.norm(estimate - x) / np.linalg.norm(x) < 0.02

    def test_infer_mode_identity(self):
        layer = Dropout(0.5)
        x = np.ones((2, 8))
        out, _ = layer.forward(x, train=False, rng=None)
        np.testing.assert_array_equal(out, x)


class TestAdam:
    def test_zero_gradient_no_change(self):
        params = {"w": np.array([1.0, 2.0])}
        state = AdamState(eta=1e-3)
        adam_step(state, params, {"w": np.zeros(2)})
        np.testing.assert_array_equal(params["w"], [1.0, 2.0])

    def test_first_step_magnitude(self):
        params = {"w": np.array([1.0])}
        state = AdamState(eta=1e-3)
        adam_step(state, params, {"w": np.array([1.0])})
        # closed form: eta * 1 / (1 + eps)
        assert abs((1.0 - params["w"][0]) - 1e-3 / (1.0 + 1e-8)) < 1e-12

    def test_equal_gradients_equal_updates(self):
        params = {"w": np.array([3.0, -1.0])}
        state = AdamState(eta=1e-2)
        adam_step(state, params, {"w": np.array([0.7, 0.7])})
        deltas = np.array([3.0, -1.0]) - params["w"]
        assert deltas[0] == deltas[1]

    def test_gradient_shape_mismatch(self):
        state = AdamState(eta=1e-3)
        with pytest.raises(ShapeMismatchError):
            adam_step(state, {"w": np.zeros(2)}, {"w": np.zeros(3)})

    def test_step_counter(self):
        state = AdamState(eta=1e-3)
        params = {"w": np.zeros(1)}
        for _ in range(3):
            adam_step(state, params, {"w": np.ones(1)})
        assert state.t == 3


class TestPredict:
    def test_strict_threshold(self):
        model = init_model(spec())
        model.set_params({k: np.zeros_like(v) for k, v in model.params().items()})
        x = np.random.default_rng(0).normal(size=(3, 5, 2))
        labels, p = model.predict(x)
        np.testing.assert_array_equal(p, 0.5)
        np.testing.assert_array_equal(labels, 0)  # p == 0.5 is not positive

    def test_just_above_half(self):
        model = init_model(spec())
        params = {k: np.zeros_like(v) for k, v in model.params().items()}
        params["head.b"] = np.array([0.1])
        model.set_params(params)
        labels, p = model.predict(np.zeros((2, 5, 2)))
        assert (p > 0.5).all()
        np.testing.assert_array_equal(labels, 1)


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        model = init_model(spec("blstm", n=16, seed=11))
        path = tmp_path / "m.model"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.spec == model.spec
        for k, v in model.params().items():
            np.testing.assert_array_equal(loaded.params()[k], v)
        x = np.random.default_rng(5).normal(size=(4, 5, 2))
        np.testing.assert_array_equal(model.forward(x), loaded.forward(x))

    def test_rejects_unknown_format(self, tmp_path):
        path = tmp_path / "junk.model"
        path.write_bytes(b'{"format": "other", "version": 9}\n')
        with pytest.raises(InvalidValueError):
            load_model(path)

    def test_conv_round_trip(self, tmp_path):
        model = init_model(spec("smallconv", shape=(16, 16, 3), seed=2))
        path = tmp_path / "c.model"
        save_model(model, path)
        loaded = load_model(path)
        x = np.random.default_rng(6).normal(size=(2, 16, 16, 3))
        np.testing.assert_array_equal(model.forward(x), loaded.forward(x))

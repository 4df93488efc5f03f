import numpy as np
import pytest

from holab.errors import DataError
from holab.nn import (
    Adam,
    DenseLayer,
    LstmLayer,
    lstm_cell_step,
    lstm_forward,
    mse,
    mse_grad,
    numeric_gradients,
)
from holab.nn.checkpoint import load_checkpoint, save_checkpoint
from holab.nn.gradcheck import max_relative_error


def zeroed_lstm(d, h):
    layer = LstmLayer(d, h, np.random.default_rng(0))
    layer.Wx[...] = 0.0
    layer.Uh[...] = 0.0
    layer.b[...] = 0.0
    return layer


# --- cell step ------------------------------------------------------------------

def test_cell_step_all_zero_params():
    layer = zeroed_lstm(3, 4)
    h, c = lstm_cell_step(np.ones(3), np.zeros(4), np.zeros(4), layer)
    np.testing.assert_array_equal(h, np.zeros(4))
    np.testing.assert_array_equal(c, np.zeros(4))


def test_cell_step_zero_input_zero_state_forget_bias():
    layer = LstmLayer(3, 4, np.random.default_rng(1))  # forget bias is 1
    h, c = lstm_cell_step(np.zeros(3), np.zeros(4), np.zeros(4), layer)
    np.testing.assert_allclose(c, np.zeros(4), atol=1e-15)


def test_cell_step_bounded():
    layer = LstmLayer(5, 6, np.random.default_rng(2))
    rng = np.random.default_rng(3)
    h = np.zeros(6)
    c = np.zeros(6)
    for _ in range(50):
        h, c = lstm_cell_step(rng.normal(size=5) * 10, h, c, layer)
        assert np.all(np.abs(h) <= 1.0)
        assert np.all(np.isfinite(c))


def test_cell_step_shape_mismatch():
    layer = LstmLayer(3, 4, np.random.default_rng(0))
    with pytest.raises(DataError):
        layer.step(np.zeros(5), np.zeros(4), np.zeros(4))


# --- many-to-one forward -----------------------------------------------------------

def test_forward_single_timestep_equals_cell_step():
    layer = LstmLayer(3, 4, np.random.default_rng(4))
    x = np.random.default_rng(5).normal(size=(1, 3))
    h_step, _ = layer.step(x[0], np.zeros(4), np.zeros(4))
    out = lstm_forward(x, [layer])
    np.testing.assert_allclose(out, h_step, atol=1e-12)


def test_forward_zero_everything():
    layer = zeroed_lstm(3, 4)
    out = lstm_forward(np.zeros((7, 3)), [layer])
    np.testing.assert_array_equal(out, np.zeros(4))


def test_forward_stack_output_dim():
    rng = np.random.default_rng(6)
    layers = [LstmLayer(84, 84, rng), LstmLayer(84, 62, rng), LstmLayer(62, 42, rng)]
    out = lstm_forward(rng.normal(size=(5, 84)), layers)
    assert out.shape == (42,)


def test_hidden_states_bounded():
    rng = np.random.default_rng(7)
    layer = LstmLayer(4, 8, rng)
    H = layer.forward(rng.normal(size=(3, 20, 4)) * 5.0, keep_cache=False)
    assert np.all(np.abs(H) <= 1.0)


# --- gradients -----------------------------------------------------------------------

def _lstm_loss_setup(seed, d=3, h=4, m=5, batch=2):
    rng = np.random.default_rng(seed)
    layer = LstmLayer(d, h, rng)
    head = DenseLayer(h, 1, "identity", rng)
    X = rng.normal(size=(batch, m, d))
    y = rng.normal(size=batch)

    def loss():
        H = layer.forward(X, keep_cache=False)
        pred = head.forward(H[:, -1, :], keep_cache=False)[:, 0]
        return mse(pred, y)

    def backward():
        layer.zero_grads()
        head.zero_grads()
        H = layer.forward(X)
        pred = head.forward(H[:, -1, :])[:, 0]
        dlast = head.backward(mse_grad(pred, y)[:, None])
        dH = np.zeros_like(H)
        dH[:, -1, :] = dlast
        layer.backward(dH)

    return layer, head, loss, backward


def test_lstm_gradcheck_small():
    layer, head, loss, backward = _lstm_loss_setup(seed=11)
    backward()
    analytic = [g.copy() for g in layer.grads() + head.grads()]
    numeric = numeric_gradients(loss, layer.params() + head.params(), eps=1e-5)
    assert max_relative_error(analytic, numeric) < 1e-5


def test_zero_upstream_gradient_gives_zero_grads():
    layer = LstmLayer(3, 4, np.random.default_rng(12))
    X = np.random.default_rng(13).normal(size=(2, 5, 3))
    H = layer.forward(X)
    layer.zero_grads()
    dX = layer.backward(np.zeros_like(H))
    np.testing.assert_array_equal(dX, np.zeros_like(X))
    for g in layer.grads():
        np.testing.assert_array_equal(g, np.zeros_like(g))


def test_dense_relu_gradcheck_away_from_kink():
    rng = np.random.default_rng(14)
    layer = DenseLayer(4, 3, "relu", rng)
    # resample until every pre-activation is safely away from the relu kink
    while True:
        X = rng.normal(size=(5, 4))
        pre = X @ layer.W.T + layer.b
        if np.min(np.abs(pre)) > 1e-3:
            break
    y = rng.normal(size=(5, 3))

    def loss():
        return mse(layer.forward(X, keep_cache=False), y)

    layer.zero_grads()
    out = layer.forward(X)
    layer.backward(mse_grad(out, y))
    analytic = [g.copy() for g in layer.grads()]
    numeric = numeric_gradients(loss, layer.params(), eps=1e-5)
    assert max_relative_error(analytic, numeric, floor=1e-4) < 1e-6


def test_lstm_input_gradient_matches_fd():
    rng = np.random.default_rng(15)
    layer = LstmLayer(3, 4, rng)
    X = rng.normal(size=(1, 4, 3))
    y = rng.normal(size=1)

    def loss():
        H = layer.forward(X, keep_cache=False)
        return mse(H[:, -1, 0], y)

    H = layer.forward(X)
    dH = np.zeros_like(H)
    dH[:, -1, 0] = mse_grad(H[:, -1, 0], y)
    layer.zero_grads()
    dX = layer.backward(dH)
    numeric = numeric_gradients(loss, [X], eps=1e-5)
    assert max_relative_error([dX], numeric) < 1e-5


# --- loss ------------------------------------------------------------------------------

def test_mse_examples():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse([0.0], [2.0]) == 4.0
    assert mse([1.0, 3.0], [3.0, 1.0]) == 4.0


def test_mse_length_mismatch():
    with pytest.raises(DataError):
        mse([1.0], [1.0, 2.0])


def test_mse_grad_is_gradient():
    rng = np.random.default_rng(16)
    pred = rng.normal(size=6)
    target = rng.normal(size=6)
    g = mse_grad(pred, target)
    num = numeric_gradients(lambda: mse(pred, target), [pred], eps=1e-6)[0]
    np.testing.assert_allclose(g, num, atol=1e-8)


# --- Adam ---------------------------------------------------------------------------------

def test_adam_zero_grad_fixed_point():
    p = np.ones((2, 2))
    opt = Adam([p], lr=0.1)
    opt.step([np.zeros((2, 2))])
    np.testing.assert_array_equal(p, np.ones((2, 2)))


def test_adam_first_step_magnitude():
    p = np.array([1.0])
    opt = Adam([p], lr=1e-3)
    opt.step([np.array([1.0])])
    assert p[0] == pytest.approx(1.0 - 1e-3, abs=1e-8)


def test_adam_parameter_independence():
    p1 = np.zeros(3)
    p2 = np.zeros(3)
    opt = Adam([p1, p2], lr=0.01)
    opt.step([np.ones(3), np.zeros(3)])
    assert np.all(p1 != 0.0)
    np.testing.assert_array_equal(p2, np.zeros(3))


def test_adam_training_reduces_mse_99_percent():
    rng = np.random.default_rng(17)
    w_true = rng.normal(size=4)
    X = rng.normal(size=(64, 4))
    y = X @ w_true
    layer = DenseLayer(4, 1, "identity", rng)
    opt = Adam(layer.params(), lr=1e-2)
    initial = mse(layer.forward(X, keep_cache=False)[:, 0], y)
    for _ in range(500):
        pred = layer.forward(X)[:, 0]
        layer.zero_grads()
        layer.backward(mse_grad(pred, y)[:, None])
        opt.step(layer.grads())
    final = mse(layer.forward(X, keep_cache=False)[:, 0], y)
    assert final <= 0.01 * initial


# --- checkpoint format -------------------------------------------------------------------

def test_checkpoint_roundtrip_property(tmp_path):
    from hypothesis import given, settings
    from hypothesis import strategies as st

    @given(st.integers(0, 2 ** 31 - 1), st.integers(1, 3))
    @settings(max_examples=15, deadline=None)
    def run(seed, n_tensors):
        rng = np.random.default_rng(seed)
        tensors = []
        for i in range(n_tensors):
            shape = tuple(int(d) for d in rng.integers(1, 5, size=rng.integers(1, 3)))
            tensors.append((f"t{i}", rng.normal(size=shape)))
        p1 = str(tmp_path / "p1.ckpt")
        p2 = str(tmp_path / "p2.ckpt")
        save_checkpoint(p1, f"model seed={seed}", tensors)
        desc, back = load_checkpoint(p1)
        save_checkpoint(p2, desc, back)
        assert open(p1, "rb").read() == open(p2, "rb").read()
        for (_, a), (_, b) in zip(tensors, back):
            np.testing.assert_array_equal(a, b)

    run()


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(18)
    tensors = [("a.W", rng.normal(size=(3, 4))), ("b", rng.normal(size=5)),
               ("scalar", np.array(2.5))]
    path = str(tmp_path / "m.ckpt")
    save_checkpoint(path, "test_model x=1", tensors)
    desc, back = load_checkpoint(path)
    assert desc == "test_model x=1"
    assert [n for n, _ in back] == ["a.W", "b", "scalar"]
    for (_, orig), (_, loaded) in zip(tensors, back):
        np.testing.assert_array_equal(np.asarray(orig), loaded)


def test_checkpoint_truncation_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(str(path), "d", [("w", np.ones((4, 4)))])
    data = path.read_bytes()
    path.write_bytes(data[:-9])
    with pytest.raises(DataError):
        load_checkpoint(str(path))


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "m.ckpt"
    path.write_bytes(b"WRONG" + b"\x00" * 32)
    with pytest.raises(DataError):
        load_checkpoint(str(path))


def test_lstm_param_views_consistent():
    layer = LstmLayer(3, 4, np.random.default_rng(19))
    assert layer.W_i.shape == (4, 3)
    assert layer.U_f.shape == (4, 4)
    assert layer.b_g.shape == (4,)
    np.testing.assert_array_equal(layer.b_f, np.ones(4))  # forget bias init
    # views alias the fused storage
    layer.Wx[0, 0] = 123.0
    assert layer.W_i[0, 0] == 123.0

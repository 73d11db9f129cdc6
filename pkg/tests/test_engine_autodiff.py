import math

import numpy as np
import pytest

from smearnet.engine import (
    SGD,
    Adam,
    Parameter,
    Tensor,
    grad_check,
    he_uniform,
    make_optimizer,
)
from smearnet.engine import kernels as K
from smearnet.engine import tensor as T
from smearnet.errors import GradientMismatch
from smearnet.models import FLATTEN, RELU, SIGMOID, SOFTMAX, ModelGraph, conv, dense, pool


def test_backward_accumulates_shared_inputs():
    # the same w and b feed two chained dense ops
    w = Parameter(np.array([[2.0]]), "w")
    b = Parameter(np.zeros(1), "b")
    x = Tensor(np.array([[3.0]]))
    y = T.dense(x, w, b)
    z = T.dense(y, w, b)  # z = 3 w^2 ; dz/dw = 6 w = 12
    z.backward(np.ones((1, 1)))
    assert w.grad.item() == pytest.approx(12.0)
    assert b.grad.item() == pytest.approx(w.data.item() + 1.0)


def test_backward_requires_scalar():
    w = Parameter(np.ones((2, 2)), "w")
    with pytest.raises(ValueError):
        T.relu(w).backward()


def test_constants_get_no_grad():
    x = Tensor(np.ones((1, 2)))
    w = Parameter(np.ones((2, 1)), "w")
    b = Parameter(np.zeros(1), "b")
    T.bce_loss(T.sigmoid(T.dense(x, w, b)), [1]).backward()
    assert x.grad is None
    assert w.grad.shape == (2, 1)


def test_flatten_round_trip(rng):
    x = Parameter(rng.normal(size=(2, 3, 2, 2)), "x")
    f = T.flatten(x)
    assert f.shape == (2, 12)
    g = rng.normal(size=(2, 12))
    f.backward(g)
    np.testing.assert_array_equal(x.grad, g.reshape(2, 3, 2, 2))


def _micro(layers, size, seed=0):
    return ModelGraph("micro", size, layers, seed=seed, dtype=np.float64)


def test_grad_check_dense_sigmoid():
    model = _micro([dense(1), SIGMOID], (2,))
    x = np.array([[1.0, -1.0]])
    report = grad_check(model, x, [1], tolerance=1e-6)
    assert report.max_rel_error < 1e-6
    assert report.checked == 3


def test_grad_check_conv_pool_dense(rng):
    model = _micro([conv(2, 3, 1, 1), RELU, pool(2, 2), FLATTEN, dense(2), SOFTMAX], 4, seed=3)
    x = rng.uniform(0, 1, size=(2, 3, 4, 4))
    report = grad_check(model, x, [0, 1], tolerance=1e-4, coords_per_param=30)
    assert report.max_rel_error < 1e-4
    assert set(report.per_parameter) == {"conv1.weight", "conv1.bias", "dense1.weight", "dense1.bias"}


def test_grad_check_thanh_shaped_stack(rng):
    layers = [conv(2, 5), RELU, pool(2, 2), conv(3, 3), RELU, pool(2, 2), FLATTEN, dense(2), SOFTMAX]
    model = _micro(layers, 16, seed=1)
    x = rng.uniform(0, 1, size=(3, 3, 16, 16))
    assert grad_check(model, x, [0, 1, 1], coords_per_param=15).max_rel_error < 1e-4


def test_grad_check_detects_corrupted_backward(monkeypatch):
    model = _micro([dense(3), RELU, dense(1), SIGMOID], (4,), seed=2)
    x = np.random.default_rng(0).normal(size=(3, 4))
    grad_check(model, x, [1, 0, 1])
    real = K.dense_backward

    def off_by_one_percent(grad_out, xx, w):
        gx, gw, gb = real(grad_out, xx, w)
        return gx, gw * 1.01, gb

    monkeypatch.setattr(K, "dense_backward", off_by_one_percent)
    with pytest.raises(GradientMismatch):
        grad_check(model, x, [1, 0, 1])


def test_grad_check_rejects_float32():
    model = ModelGraph("m", (2,), [dense(1), SIGMOID], dtype=np.float32)
    with pytest.raises(TypeError):
        grad_check(model, np.ones((1, 2)), [1])


def _param(values, grad):
    p = Parameter(np.array(values, dtype=np.float64), "p")
    p.grad = np.array(grad, dtype=np.float64)
    return p


@pytest.mark.parametrize("make", [lambda ps: SGD(ps, 0.1, momentum=0.9), lambda ps: Adam(ps)])
def test_zero_gradient_is_fixed_point(make):
    p = _param([1.0, -2.0], [0.0, 0.0])
    opt = make([p])
    for _ in range(5):
        opt.step()
    assert p.data.tolist() == [1.0, -2.0]


def test_sgd_plain_and_momentum():
    p = _param([1.0], [0.5])
    SGD([p], 0.1).step()
    assert p.data.item() == pytest.approx(0.95)
    p = _param([0.0], [1.0])
    opt = SGD([p], 0.1, momentum=0.9)
    opt.step()
    opt.step()
    # v1 = -0.1, v2 = 0.9 * -0.1 - 0.1 = -0.19; w = -0.29
    assert p.data.item() == pytest.approx(-0.29)


def adam_oracle(grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    w, m, v = 0.0, 0.0, 0.0
    for t, g in enumerate(grads, 1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
    return w


def test_adam_first_step():
    p = _param([0.0], [1.0])
    Adam([p]).step()
    assert p.data.item() == pytest.approx(-0.001, rel=1e-6)


def test_adam_matches_textbook_recurrence(rng):
    grads = rng.normal(size=12)
    p = _param([0.0], [0.0])
    opt = Adam([p], learning_rate=0.01)
    for g in grads:
        p.grad = np.array([g])
        opt.step()
    assert p.data.item() == pytest.approx(adam_oracle(grads, lr=0.01), rel=1e-9, abs=1e-12)


def test_adam_keeps_float32():
    p = Parameter(np.ones(3, np.float32), "p")
    p.grad = np.ones(3, np.float32)
    Adam([p]).step()
    assert p.data.dtype == np.float32


def test_make_optimizer():
    p = _param([0.0], [0.0])
    assert isinstance(make_optimizer("adam", [p], 1e-3), Adam)
    assert isinstance(make_optimizer("sgd", [p], 1e-2, momentum=0.5), SGD)
    with pytest.raises(ValueError):
        make_optimizer("rmsprop", [p], 1e-3)
    with pytest.raises(ValueError):
        SGD([p], 0.0)


def test_he_uniform_bounds_and_determinism():
    a = he_uniform(np.random.default_rng(5), (16, 3, 5, 5), 75)
    b = he_uniform(np.random.default_rng(5), (16, 3, 5, 5), 75)
    np.testing.assert_array_equal(a, b)
    bound = math.sqrt(6 / 75)
    assert np.abs(a).max() <= bound
    assert a.dtype == np.float32


def test_he_uniform_statistics():
    fan = 75
    x = he_uniform(np.random.default_rng(0), (10_000,), fan, np.float64)
    sigma = math.sqrt(2 / fan)  # variance of U(-b, b) is b^2 / 3 = 2 / fan_in
    assert abs(x.mean()) < 3 * sigma / 100
    assert x.std() == pytest.approx(sigma, rel=0.03)


def test_model_init_seeded_and_biases_zero():
    layers = [conv(4, 3), RELU, pool(2, 2), FLATTEN, dense(2), SOFTMAX]
    a, b = ModelGraph("m", 8, layers, seed=4), ModelGraph("m", 8, layers, seed=4)
    c = ModelGraph("m", 8, layers, seed=5)
    for pa, pb, pc in zip(a.parameters, b.parameters, c.parameters):
        np.testing.assert_array_equal(pa.data, pb.data)
        if pa.name.endswith("bias"):
            assert not pa.data.any()
        else:
            assert not np.array_equal(pa.data, pc.data)

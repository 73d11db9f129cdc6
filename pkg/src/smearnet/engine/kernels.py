"""Forward and backward numpy kernels for every layer the three networks use.

Activations are ``[batch, channel, height, width]``; dense inputs are
``[batch, features]``. Convolution runs as im2col + GEMM over batch chunks
so the column buffer stays bounded regardless of batch size.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatch

PROB_EPS = 1e-7
# upper bound on the im2col buffer per chunk, in bytes
_COL_BUDGET = 48 * 2**20


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def pool_output_size(size: int, kernel: int, stride: int) -> int:
    return (size - kernel) // stride + 1


def _pad(x, padding):
    if padding == 0:
        return x
    p = padding
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def _windows(xp, kernel, stride):
    # view (N, C, Ho, Wo, K, K); no copy
    return sliding_window_view(xp, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]


def _chunk(n, ho, wo, cin, k, itemsize):
    per_sample = max(1, ho * wo * cin * k * k * itemsize)
    return max(1, min(n, _COL_BUDGET // per_sample))


def _check_conv(x, w, b, stride, padding):
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatch(f"conv2d expects 4-d input and weight, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"input has {x.shape[1]} channels, kernel expects {w.shape[1]}")
    if w.shape[2] != w.shape[3]:
        raise ShapeMismatch("only square kernels are supported")
    if b is not None and b.shape != (w.shape[0],):
        raise ShapeMismatch(f"bias shape {b.shape} does not match {w.shape[0]} filters")
    k = w.shape[2]
    if x.shape[2] + 2 * padding < k or x.shape[3] + 2 * padding < k:
        raise ShapeMismatch(f"kernel {k} larger than padded input {x.shape[2:]}")
    if stride < 1 or padding < 0:
        raise ShapeMismatch("stride must be >= 1 and padding >= 0")


def conv2d_forward(x, w, b, stride=1, padding=0):
    _check_conv(x, w, b, stride, padding)
    n, cin, h, wd = x.shape
    cout, _, k, _ = w.shape
    ho = conv_output_size(h, k, stride, padding)
    wo = conv_output_size(wd, k, stride, padding)
    xp = _pad(x, padding)
    out = np.empty((n, cout, ho, wo), dtype=np.result_type(x, w))
    step = _chunk(n, ho, wo, cin, k, out.itemsize)
    for s in range(0, n, step):
        win = _windows(xp[s:s + step], k, stride)
        # (n, ho, wo, cout)
        y = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))
        out[s:s + step] = y.transpose(0, 3, 1, 2)
    if b is not None:
        out += b[None, :, None, None]
    return out


def conv2d_backward(grad_out, x, w, stride=1, padding=0):
    """Return ``(grad_x, grad_w, grad_b)`` for :func:`conv2d_forward`."""
    _check_conv(x, w, None, stride, padding)
    n, cin, h, wd = x.shape
    cout, _, k, _ = w.shape
    ho = conv_output_size(h, k, stride, padding)
    wo = conv_output_size(wd, k, stride, padding)
    if grad_out.shape != (n, cout, ho, wo):
        raise ShapeMismatch(f"grad_out shape {grad_out.shape} != {(n, cout, ho, wo)}")
    xp = _pad(x, padding)
    grad_xp = np.zeros(xp.shape, dtype=np.result_type(grad_out, w))
    grad_w = np.zeros(w.shape, dtype=np.result_type(grad_out, x))
    grad_b = grad_out.sum(axis=(0, 2, 3))
    step = _chunk(n, ho, wo, cin, k, grad_xp.itemsize)
    for s in range(0, n, step):
        g = grad_out[s:s + step]
        win = _windows(xp[s:s + step], k, stride)
        grad_w += np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))
        # (n, ho, wo, cin, k, k)
        cols = np.tensordot(g, w, axes=([1], [0]))
        gx = grad_xp[s:s + step]
        for i in range(k):
            for j in range(k):
                gx[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += \
                    cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    if padding:
        grad_x = grad_xp[:, :, padding:-padding, padding:-padding]
    else:
        grad_x = grad_xp
    return np.ascontiguousarray(grad_x), grad_w, grad_b


def maxpool2d_forward(x, kernel=2, stride=2):
    """Window maxima plus the flat ``h*W + w`` source index of each maximum.

    Ties go to the first element of the window in row-major order.
    """
    if x.ndim != 4:
        raise ShapeMismatch(f"maxpool expects 4-d input, got {x.shape}")
    n, c, h, w = x.shape
    if h < kernel or w < kernel:
        raise ShapeMismatch(f"pool kernel {kernel} larger than input {x.shape[2:]}")
    ho = pool_output_size(h, kernel, stride)
    wo = pool_output_size(w, kernel, stride)
    win = _windows(x, kernel, stride).reshape(n, c, ho, wo, kernel * kernel)
    arg = win.argmax(axis=-1)
    y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    rows = np.arange(ho)[:, None] * stride + arg // kernel
    cols = np.arange(wo)[None, :] * stride + arg % kernel
    return y, rows * w + cols


def maxpool2d_backward(grad_out, argmax, input_shape):
    n, c, h, w = input_shape
    base = (np.arange(n * c) * (h * w)).reshape(n, c, 1, 1)
    flat = (argmax + base).ravel()
    grad = np.bincount(flat, weights=grad_out.ravel(), minlength=n * c * h * w)
    return grad.reshape(input_shape).astype(grad_out.dtype, copy=False)


def dense_forward(x, w, b):
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeMismatch(f"dense: cannot multiply {x.shape} by {w.shape}")
    if b.shape != (w.shape[1],):
        raise ShapeMismatch(f"dense: bias {b.shape} for {w.shape[1]} outputs")
    return x @ w + b


def dense_backward(grad_out, x, w):
    return grad_out @ w.T, x.T @ grad_out, grad_out.sum(axis=0)


def relu(x):
    return np.maximum(x, 0)


def relu_backward(grad_out, x):
    return grad_out * (x > 0)


def sigmoid(x):
    # tanh form is overflow-free for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid_backward(grad_out, y):
    return grad_out * y * (1 - y)


def softmax_rows(x):
    if x.ndim != 2:
        raise ShapeMismatch(f"softmax expects [N, classes], got {x.shape}")
    z = np.exp(x - x.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def softmax_backward(grad_out, y):
    return y * (grad_out - (grad_out * y).sum(axis=1, keepdims=True))


def bce(p, t):
    """Mean binary cross-entropy of probabilities ``p`` against 0/1 targets."""
    p = np.asarray(p).reshape(-1)
    t = np.asarray(t, dtype=p.dtype).reshape(-1)
    pc = np.clip(p, PROB_EPS, 1 - PROB_EPS)
    return float(-np.mean(t * np.log(pc) + (1 - t) * np.log1p(-pc)))


def bce_backward(p, t):
    shape = np.shape(p)
    p = np.asarray(p).reshape(-1)
    t = np.asarray(t, dtype=p.dtype).reshape(-1)
    inside = (p > PROB_EPS) & (p < 1 - PROB_EPS)
    pc = np.clip(p, PROB_EPS, 1 - PROB_EPS)
    g = (pc - t) / (pc * (1 - pc)) / p.size
    return (g * inside).reshape(shape)


def cross_entropy(probs, t):
    """Mean ``-log p[target]`` over rows of a probability matrix."""
    t = np.asarray(t, dtype=np.int64).reshape(-1)
    if probs.ndim != 2 or probs.shape[0] != t.size:
        raise ShapeMismatch(f"cross_entropy: probs {probs.shape} vs {t.size} targets")
    pt = np.clip(probs[np.arange(t.size), t], PROB_EPS, 1.0)
    return float(-np.mean(np.log(pt)))


def cross_entropy_backward(probs, t):
    t = np.asarray(t, dtype=np.int64).reshape(-1)
    rows = np.arange(t.size)
    pt = probs[rows, t]
    grad = np.zeros_like(probs)
    grad[rows, t] = np.where(pt > PROB_EPS, -1.0 / np.maximum(pt, PROB_EPS), 0.0) / t.size
    return grad

"""Tape-free reverse-mode differentiation over numpy arrays.

Each op returns a :class:`Tensor` remembering its parents and a closure that
maps the output gradient to parent gradients. :meth:`Tensor.backward` walks
the graph in reverse topological order; only leaves that require gradients
(normally :class:`Parameter` objects) keep their ``grad`` afterwards.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K


class Tensor:
    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None):
        self.data = np.asarray(data)
        self.grad = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in self.parents)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype})"

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node.parents)

        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.backward_fn is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node.parents, node.backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg


class Parameter(Tensor):
    """A learned leaf tensor with a name and a persistent gradient buffer."""

    def __init__(self, data, name=""):
        super().__init__(data, requires_grad=True)
        self.name = name

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.dtype})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def conv2d(x, w, b, stride=1, padding=0):
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    out = K.conv2d_forward(x.data, w.data, b.data, stride, padding)

    def backward(g):
        return K.conv2d_backward(g, x.data, w.data, stride, padding)

    return Tensor(out, parents=(x, w, b), backward_fn=backward)


def max_pool2d(x, kernel=2, stride=2):
    x = as_tensor(x)
    y, arg = K.maxpool2d_forward(x.data, kernel, stride)
    shape = x.shape

    def backward(g):
        return (K.maxpool2d_backward(g, arg, shape),)

    return Tensor(y, parents=(x,), backward_fn=backward)


def dense(x, w, b):
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    out = K.dense_forward(x.data, w.data, b.data)

    def backward(g):
        return K.dense_backward(g, x.data, w.data)

    return Tensor(out, parents=(x, w, b), backward_fn=backward)


def flatten(x):
    x = as_tensor(x)
    shape = x.shape
    return Tensor(x.data.reshape(shape[0], -1), parents=(x,),
                  backward_fn=lambda g: (g.reshape(shape),))


def relu(x):
    x = as_tensor(x)
    return Tensor(K.relu(x.data), parents=(x,),
                  backward_fn=lambda g: (K.relu_backward(g, x.data),))


def sigmoid(x):
    x = as_tensor(x)
    y = K.sigmoid(x.data)
    return Tensor(y, parents=(x,), backward_fn=lambda g: (K.sigmoid_backward(g, y),))


def softmax(x):
    x = as_tensor(x)
    y = K.softmax_rows(x.data)
    return Tensor(y, parents=(x,), backward_fn=lambda g: (K.softmax_backward(g, y),))


def bce_loss(p, targets):
    p = as_tensor(p)
    t = np.asarray(targets)
    value = K.bce(p.data, t)
    return Tensor(np.asarray(value, dtype=p.dtype), parents=(p,),
                  backward_fn=lambda g: (g * K.bce_backward(p.data, t),))


def cross_entropy_loss(probs, targets):
    probs = as_tensor(probs)
    t = np.asarray(targets)
    value = K.cross_entropy(probs.data, t)
    return Tensor(np.asarray(value, dtype=probs.dtype), parents=(probs,),
                  backward_fn=lambda g: (g * K.cross_entropy_backward(probs.data, t),))

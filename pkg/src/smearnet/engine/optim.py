"""SGD with momentum and Adam, updating :class:`Parameter` values in place."""

from __future__ import annotations

import numpy as np


class Optimizer:
    kind = ""

    def __init__(self, params, learning_rate):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.params = list(params)
        self.learning_rate = learning_rate
        self.step_count = 0

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        raise NotImplementedError


class SGD(Optimizer):
    """``v <- momentum * v - lr * g``; ``w <- w + v``."""

    kind = "sgd"

    def __init__(self, params, learning_rate=0.01, momentum=0.0):
        super().__init__(params, learning_rate)
        self.momentum = momentum
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        lr = self.learning_rate
        for p, v in zip(self.params, self.velocity):
            if p.grad is None:
                continue
            v *= self.momentum
            v -= lr * p.grad
            p.data += v
        self.step_count += 1


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        super().__init__(params, learning_rate)
        self.beta1, self.beta2, self.epsilon = beta1, beta2, epsilon
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        # bias corrections folded into the step size
        scale = float(self.learning_rate * np.sqrt(1 - b2 ** t) / (1 - b1 ** t))
        eps_hat = float(self.epsilon * np.sqrt(1 - b2 ** t))
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.data -= scale * m / (np.sqrt(v) + eps_hat)


def make_optimizer(kind, params, learning_rate, **kwargs):
    if kind == "adam":
        return Adam(params, learning_rate, **kwargs)
    if kind == "sgd":
        return SGD(params, learning_rate, **kwargs)
    raise ValueError(f"unknown optimizer {kind!r}; expected 'sgd' or 'adam'")

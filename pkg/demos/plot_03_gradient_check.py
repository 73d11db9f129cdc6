"""
Checking gradients against finite differences
=============================================

The engine differentiates by walking a graph of small ops, each with a
hand-written backward rule. A central difference
``(L(w + h) - L(w - h)) / 2h`` in double precision is an independent
estimate of every partial derivative; the two should agree to about 1e-7
relative error for smooth losses.
"""

import numpy as np

from smearnet.engine import grad_check
from smearnet.engine import kernels as K
from smearnet.models import FLATTEN, RELU, SIGMOID, SOFTMAX, ModelGraph, conv, dense, pool

rng = np.random.default_rng(0)

###############################################################################
# A miniature of the three-block network: valid 5x5 convolutions, max pooling
# and a softmax head, sized so that every coordinate can be checked.

net = ModelGraph("mini", 16, [conv(2, 5), RELU, pool(2, 2), conv(3, 3), RELU, pool(2, 2),
                              FLATTEN, dense(2), SOFTMAX], seed=1, dtype=np.float64)
print(net.summary())
x = rng.uniform(0, 1, (3, 3, 16, 16))
report = grad_check(net, x, [0, 1, 1], coords_per_param=10_000)
print(report)
for name, err in report.per_parameter.items():
    print(f"  {name:<14} worst relative error {err:.2e}")

###############################################################################
# A sigmoid head trained with binary cross-entropy goes through a different
# loss path.

sig = ModelGraph("mini-sigmoid", 8, [conv(2, 3, 1, 1), RELU, pool(2, 2), FLATTEN,
                                     dense(1), SIGMOID], seed=2, dtype=np.float64)
print(grad_check(sig, rng.uniform(0, 1, (4, 3, 8, 8)), [0, 1, 0, 1]))

###############################################################################
# The check is only useful if it fails on a wrong rule. Scaling the dense
# weight gradient by 1% is enough to trip it.

real = K.dense_backward
K.dense_backward = lambda g, xx, w: (lambda r: (r[0], r[1] * 1.01, r[2]))(real(g, xx, w))
try:
    grad_check(sig, rng.uniform(0, 1, (4, 3, 8, 8)), [0, 1, 0, 1])
except AssertionError as exc:
    print("caught:", exc)
finally:
    K.dense_backward = real

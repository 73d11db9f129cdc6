"""
The three network architectures
===============================

Three classifiers are compared: a plain three-block CNN with a sigmoid
output, AlexNet with its final softmax swapped for a single sigmoid unit,
and a compact network of three valid 5x5 convolutions with a two-way
softmax. Parameter counts follow directly from the layer shapes.
"""

import numpy as np

from smearnet.models import build

###############################################################################
# Shape chains and parameter budgets. AlexNet allocates roughly 230 MB of
# float32 weights.

for name in ("thanh_net", "basic_cnn", "alexnet_sigmoid"):
    g = build(name, seed=0)
    print(g.summary())
    print()

###############################################################################
# A forward pass of the compact network on one 128x128 image. Fresh weights
# give an uninformative prediction; the decision rule for a softmax head is
# an argmax with ties going to "normal".

net = build("thanh_net", seed=0)
x = np.random.default_rng(0).uniform(0, 1, (1, 3, 128, 128)).astype(np.float32)
out = net(x)
print("softmax output:", out.data, "decision:", net.decide(out))

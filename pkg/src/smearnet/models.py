"""The three classifier architectures as ordered layer lists.

A :class:`ModelGraph` is a plain sequential network: a list of
:class:`LayerSpec` plus the parameters they own. Construction walks the
shape algebra once, so an inconsistent stack fails at build time rather
than mid-training.

Label convention: 0 = normal, 1 = cancer. Sigmoid heads emit
``P(cancer)`` in one unit; softmax heads emit ``[P(normal), P(cancer)]``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .engine import tensor as T
from .engine.init import fan_in, he_uniform
from .engine.kernels import conv_output_size, pool_output_size
from .engine.tensor import Parameter
from .errors import ShapeMismatch

LAYER_KINDS = ("conv2d", "maxpool2d", "relu", "dense", "flatten", "sigmoid", "softmax")
HEADS = {"sigmoid": "sigmoid_1", "softmax": "softmax_2"}
THANH_FLATTEN = 9216


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    out_channels: int | None = None
    kernel: int | None = None
    stride: int = 1
    padding: int = 0
    out_features: int | None = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("conv2d", "maxpool2d") and (self.kernel is None or self.kernel < 1):
            raise ValueError(f"{self.kind} needs kernel >= 1")
        if self.stride < 1 or self.padding < 0:
            raise ValueError("stride must be >= 1 and padding >= 0")
        if self.kind == "conv2d" and (self.out_channels is None or self.out_channels < 1):
            raise ValueError("conv2d needs out_channels >= 1")
        if self.kind == "dense" and (self.out_features is None or self.out_features < 1):
            raise ValueError("dense needs out_features >= 1")


def conv(out_channels, kernel, stride=1, padding=0):
    return LayerSpec("conv2d", out_channels=out_channels, kernel=kernel,
                     stride=stride, padding=padding)


def pool(kernel=2, stride=2):
    return LayerSpec("maxpool2d", kernel=kernel, stride=stride)


def dense(out_features):
    return LayerSpec("dense", out_features=out_features)


RELU = LayerSpec("relu")
FLATTEN = LayerSpec("flatten")
SIGMOID = LayerSpec("sigmoid")
SOFTMAX = LayerSpec("softmax")


class ModelGraph:
    """Sequential network with a sigmoid or softmax head.

    Parameters
    ----------
    name : str
        Architecture name, recorded in checkpoints.
    input_size : int or tuple
        Square edge ``S`` of ``[N, 3, S, S]`` inputs, or a full per-sample
        shape such as ``(F,)`` for dense-only networks.
    layers : list of LayerSpec
        Last layer must be ``sigmoid`` (one unit) or ``softmax`` (two units).
    seed : int
        Seeds the He-uniform weight draw; biases start at zero.
    dtype : numpy dtype
        ``float32`` for training, ``float64`` for gradient checking.
    """

    def __init__(self, name, input_size, layers, seed=0, dtype=np.float32):
        self.name = name
        self.input_size = input_size
        self.layers = list(layers)
        self.seed = seed
        self.dtype = np.dtype(dtype)
        if not self.layers or self.layers[-1].kind not in HEADS:
            raise ShapeMismatch("the last layer must be sigmoid or softmax")
        self.head = HEADS[self.layers[-1].kind]

        rng = np.random.default_rng(seed)
        self.parameters = []
        self._layer_params = []
        self.shapes = []
        shape = self.input_shape
        counters = {}
        for spec in self.layers:
            owned = ()
            if spec.kind == "conv2d":
                if len(shape) != 3:
                    raise ShapeMismatch(f"conv2d needs a [C, H, W] input, got {shape}")
                c, h, w = shape
                k = spec.kernel
                if h + 2 * spec.padding < k or w + 2 * spec.padding < k:
                    raise ShapeMismatch(f"kernel {k} does not fit input {shape}")
                wshape = (spec.out_channels, c, k, k)
                owned = self._new_params("conv", counters, rng, wshape)
                shape = (spec.out_channels,
                         conv_output_size(h, k, spec.stride, spec.padding),
                         conv_output_size(w, k, spec.stride, spec.padding))
            elif spec.kind == "maxpool2d":
                if len(shape) != 3 or shape[1] < spec.kernel or shape[2] < spec.kernel:
                    raise ShapeMismatch(f"pool kernel {spec.kernel} does not fit {shape}")
                shape = (shape[0],
                         pool_output_size(shape[1], spec.kernel, spec.stride),
                         pool_output_size(shape[2], spec.kernel, spec.stride))
            elif spec.kind == "flatten":
                shape = (int(np.prod(shape)),)
            elif spec.kind == "dense":
                if len(shape) != 1:
                    raise ShapeMismatch(f"dense needs a flat input, got {shape}")
                owned = self._new_params("dense", counters, rng, (shape[0], spec.out_features))
                shape = (spec.out_features,)
            self._layer_params.append(owned)
            self.shapes.append(shape)

        want = (1,) if self.head == "sigmoid_1" else (2,)
        if shape != want:
            raise ShapeMismatch(f"{self.head} head must output {want}, stack gives {shape}")

    def _new_params(self, prefix, counters, rng, wshape):
        counters[prefix] = counters.get(prefix, 0) + 1
        name = f"{prefix}{counters[prefix]}"
        w = Parameter(he_uniform(rng, wshape, fan_in(wshape), self.dtype), f"{name}.weight")
        b = Parameter(np.zeros(wshape[0] if len(wshape) == 4 else wshape[1], self.dtype),
                      f"{name}.bias")
        self.parameters += [w, b]
        return (w, b)

    @property
    def input_shape(self):
        if isinstance(self.input_size, int):
            return (3, self.input_size, self.input_size)
        return tuple(self.input_size)

    @property
    def output_shape(self):
        return self.shapes[-1]

    def flatten_size(self):
        for spec, shape in zip(self.layers, self.shapes):
            if spec.kind == "flatten":
                return shape[0]
        return None

    def param_count(self):
        return sum(p.data.size for p in self.parameters)

    def named_parameters(self):
        return {p.name: p for p in self.parameters}

    def zero_grad(self):
        for p in self.parameters:
            p.zero_grad()

    def forward(self, x):
        """Run the stack on ``x`` (array or Tensor) and return the head Tensor."""
        x = T.as_tensor(np.asarray(x, dtype=self.dtype) if not isinstance(x, T.Tensor) else x)
        if x.shape[1:] != self.input_shape:
            raise ShapeMismatch(
                f"{self.name} expects inputs of shape [N, {', '.join(map(str, self.input_shape))}], "
                f"got {list(x.shape)}")
        for spec, owned in zip(self.layers, self._layer_params):
            kind = spec.kind
            if kind == "conv2d":
                x = T.conv2d(x, owned[0], owned[1], spec.stride, spec.padding)
            elif kind == "maxpool2d":
                x = T.max_pool2d(x, spec.kernel, spec.stride)
            elif kind == "relu":
                x = T.relu(x)
            elif kind == "flatten":
                x = T.flatten(x)
            elif kind == "dense":
                x = T.dense(x, owned[0], owned[1])
            elif kind == "sigmoid":
                x = T.sigmoid(x)
            elif kind == "softmax":
                x = T.softmax(x)
        return x

    __call__ = forward

    def loss_of(self, out, targets):
        """Head-matched loss: BCE for sigmoid heads, cross-entropy for softmax."""
        if self.head == "sigmoid_1":
            return T.bce_loss(out, targets)
        return T.cross_entropy_loss(out, targets)

    def loss(self, x, targets):
        return self.loss_of(self.forward(x), targets)

    def cancer_probability(self, out):
        out = out.data if isinstance(out, T.Tensor) else np.asarray(out)
        return out[:, 0] if self.head == "sigmoid_1" else out[:, 1]

    def decide(self, out, threshold=0.5):
        """Labels from head outputs.

        Sigmoid heads predict cancer when ``P(cancer) >= threshold``. Softmax
        heads take the argmax with ties going to class 0 (normal).
        """
        out = out.data if isinstance(out, T.Tensor) else np.asarray(out)
        if self.head == "sigmoid_1":
            return (out[:, 0] >= threshold).astype(np.int64)
        return (out[:, 1] > out[:, 0]).astype(np.int64)

    def astype(self, dtype):
        """Cast all parameters in place (used to switch precision)."""
        self.dtype = np.dtype(dtype)
        for p in self.parameters:
            p.data = p.data.astype(self.dtype)
            p.grad = None
        return self

    def describe(self) -> dict:
        return {
            "model": self.name,
            "input_size": self.input_size if isinstance(self.input_size, int)
            else list(self.input_size),
            "head": self.head,
            "layers": [asdict(s) for s in self.layers],
        }

    def summary(self) -> str:
        lines = [f"{self.name}: input {list(self.input_shape)}"]
        for spec, shape, owned in zip(self.layers, self.shapes, self._layer_params):
            n = sum(p.data.size for p in owned)
            lines.append(f"  {spec.kind:<10} -> {list(shape)}" + (f"  params={n}" if n else ""))
        lines.append(f"  total params={self.param_count()}")
        return "\n".join(lines)


def basic_cnn_layers():
    layers = []
    for _ in range(3):
        layers += [conv(128, 3, 1, 1), RELU, pool(2, 2)]
    return layers + [FLATTEN, dense(64), RELU, dense(1), SIGMOID]


def alexnet_layers():
    return [
        conv(96, 11, 4, 0), RELU, pool(3, 2),
        conv(256, 5, 1, 2), RELU, pool(3, 2),
        conv(384, 3, 1, 1), RELU,
        conv(384, 3, 1, 1), RELU,
        conv(256, 3, 1, 1), RELU, pool(3, 2),
        FLATTEN, dense(4096), RELU, dense(4096), RELU, dense(1), SIGMOID,
    ]


def thanh_net_layers():
    return [
        conv(16, 5), RELU, pool(2, 2),
        conv(32, 5), RELU, pool(2, 2),
        conv(64, 5), RELU, pool(2, 2),
        FLATTEN, dense(2), SOFTMAX,
    ]


def build_basic_cnn(seed=0, dtype=np.float32):
    return ModelGraph("basic_cnn", 128, basic_cnn_layers(), seed, dtype)


def build_alexnet_sigmoid(seed=0, dtype=np.float32):
    return ModelGraph("alexnet_sigmoid", 227, alexnet_layers(), seed, dtype)


def build_thanh_net(seed=0, dtype=np.float32):
    g = ModelGraph("thanh_net", 128, thanh_net_layers(), seed, dtype)
    if g.flatten_size() != THANH_FLATTEN:
        raise ShapeMismatch(f"thanh_net flatten size {g.flatten_size()} != {THANH_FLATTEN}")
    return g


ARCHITECTURES = {
    "basic_cnn": build_basic_cnn,
    "alexnet_sigmoid": build_alexnet_sigmoid,
    "thanh_net": build_thanh_net,
}

# epoch counts at which each network was reported
DEFAULT_EPOCHS = {"basic_cnn": 17, "alexnet_sigmoid": 12, "thanh_net": 10}


def build(name, seed=0, dtype=np.float32):
    try:
        builder = ARCHITECTURES[name]
    except KeyError:
        raise ValueError(f"unknown architecture {name!r}; choose from "
                         f"{', '.join(ARCHITECTURES)}") from None
    return builder(seed, dtype)


def from_description(desc: dict, dtype=np.float32) -> ModelGraph:
    """Rebuild a graph skeleton from :meth:`ModelGraph.describe` output."""
    size = desc["input_size"]
    layers = [LayerSpec(**d) for d in desc["layers"]]
    return ModelGraph(desc["model"], size if isinstance(size, int) else tuple(size),
                      layers, desc.get("seed", 0), dtype)


def param_count(graph: ModelGraph) -> int:
    return graph.param_count()

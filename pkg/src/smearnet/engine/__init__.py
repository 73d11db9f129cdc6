"""Dense-tensor compute core with reverse-mode differentiation."""

from .gradcheck import GradCheckReport, grad_check
from .init import fan_in, he_uniform
from .kernels import (
    bce,
    bce_backward,
    conv2d_backward,
    conv2d_forward,
    conv_output_size,
    cross_entropy,
    cross_entropy_backward,
    dense_backward,
    dense_forward,
    maxpool2d_backward,
    maxpool2d_forward,
    pool_output_size,
    relu,
    sigmoid,
    softmax_rows,
)
from .optim import SGD, Adam, Optimizer, make_optimizer
from .tensor import Parameter, Tensor

__all__ = [
    "Adam", "GradCheckReport", "Optimizer", "Parameter", "SGD", "Tensor",
    "bce", "bce_backward", "conv2d_backward", "conv2d_forward", "conv_output_size",
    "cross_entropy", "cross_entropy_backward", "dense_backward", "dense_forward",
    "fan_in", "grad_check", "he_uniform", "make_optimizer", "maxpool2d_backward",
    "maxpool2d_forward", "pool_output_size", "relu", "sigmoid", "softmax_rows",
]

"""Deterministic He-uniform initialisation."""

from __future__ import annotations

import numpy as np


def he_uniform(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    """Uniform on ``[-b, b]`` with ``b = sqrt(6 / fan_in)``."""
    bound = np.sqrt(6.0 / fan_in)
    u = rng.random(shape, dtype=np.dtype(dtype).type)
    u *= 2 * bound
    u -= bound
    return u


def fan_in(shape) -> int:
    """Inputs feeding one output unit: ``Cin*K*K`` for conv kernels, ``F`` for dense."""
    if len(shape) == 4:
        return int(shape[1] * shape[2] * shape[3])
    if len(shape) == 2:
        return int(shape[0])
    raise ValueError(f"no fan-in rule for a weight of shape {shape}")

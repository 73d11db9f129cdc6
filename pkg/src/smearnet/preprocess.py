"""Per-image conditioning: nearest resize, 3x3 median, 3x3 sharpen, tensors.

Both 3x3 filters pad by replicating the border pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageio import check_image

SHARPEN_KERNEL = np.array([[0, -1, 0],
                           [-1, 5, -1],
                           [0, -1, 0]], dtype=np.int32)


@dataclass(frozen=True)
class PreprocessConfig:
    target_size: int = 256
    apply_median: bool = True
    apply_sharpen: bool = True
    model_input_size: int = 128

    def __post_init__(self):
        if not self.target_size >= self.model_input_size >= 1:
            raise ValueError(
                f"need target_size >= model_input_size >= 1, got "
                f"{self.target_size} and {self.model_input_size}")


def nearest_indices(src: int, dst: int) -> np.ndarray:
    """Source index sampled by each of ``dst`` output positions."""
    idx = ((np.arange(dst) + 0.5) * src / dst).astype(np.int64)
    return np.clip(idx, 0, src - 1)


def resize_nearest(img: np.ndarray, w: int, h: int) -> np.ndarray:
    check_image(img)
    if w < 1 or h < 1:
        raise ValueError(f"target size must be positive, got {w}x{h}")
    rows = nearest_indices(img.shape[0], h)
    cols = nearest_indices(img.shape[1], w)
    return img[rows[:, None], cols[None, :]]


def _windows3(img: np.ndarray) -> np.ndarray:
    # (9, H, W, C) stack of the replicate-padded 3x3 neighbourhood, row-major
    h, w = img.shape[:2]
    padded = np.pad(img, ((1, 1), (1, 1), (0, 0)), mode="edge")
    return np.stack([padded[dy:dy + h, dx:dx + w]
                     for dy in range(3) for dx in range(3)])


def median3(img: np.ndarray) -> np.ndarray:
    check_image(img)
    # median of 9 integers is the 5th order statistic, no averaging needed
    return np.partition(_windows3(img), 4, axis=0)[4]


def sharpen3(img: np.ndarray) -> np.ndarray:
    check_image(img)
    win = _windows3(img).astype(np.int32)
    out = np.tensordot(SHARPEN_KERNEL.ravel(), win, axes=1)
    return np.clip(out, 0, 255).astype(np.uint8)


def condition(img: np.ndarray, config: PreprocessConfig = PreprocessConfig()) -> np.ndarray:
    """Resize to ``target_size`` then median-filter and sharpen as configured."""
    out = resize_nearest(img, config.target_size, config.target_size)
    if config.apply_median:
        out = median3(out)
    if config.apply_sharpen:
        out = sharpen3(out)
    return out


def to_tensor(img: np.ndarray, dtype=np.float32) -> np.ndarray:
    """Scale bytes into [0, 1] and lay out as ``[1, 3, H, W]``."""
    check_image(img)
    return img.transpose(2, 0, 1)[None].astype(dtype) / np.dtype(dtype).type(255)


def model_input(img: np.ndarray, size: int, dtype=np.float32) -> np.ndarray:
    """Nearest-resize an already conditioned image to the network input size."""
    if img.shape[0] != size or img.shape[1] != size:
        img = resize_nearest(img, size, size)
    return to_tensor(img, dtype)

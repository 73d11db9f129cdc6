"""Synthetic labelled corpora for smoke tests and demos.

Real smear datasets are not redistributable, so the training checks run on
generated images with a known, learnable class difference.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imageio import CLASS_NAMES, save_image


def blob_images(n, seed=0, size=128):
    """Two well separated clusters in pixel space.

    Class 0 images are noisy dark fields, class 1 noisy bright fields.
    Labels alternate so any prefix is balanced.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    base = np.where(labels == 1, 180.0, 60.0)[:, None, None, None]
    tint = rng.uniform(-20, 20, size=(n, 1, 1, 3))
    noise = rng.normal(0, 25, size=(n, size, size, 3))
    imgs = np.clip(base + tint + noise, 0, 255).astype(np.uint8)
    return list(imgs), labels.tolist()


def _draw_discs(img, rng, count, r_range, color, jitter):
    h, w = img.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(count):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        r = rng.uniform(*r_range)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        img[mask] = np.clip(np.asarray(color) + rng.uniform(-jitter, jitter, 3), 0, 255)


def smear_image(label, rng, size=128):
    """A cartoon blood smear: pale field with red cells, plus large violet
    nuclei when ``label`` is 1."""
    img = np.empty((size, size, 3), dtype=np.float64)
    img[:] = np.array([235.0, 210.0, 215.0]) + rng.uniform(-15, 15, 3)
    scale = size / 128
    _draw_discs(img, rng, int(rng.integers(25, 40)), (4 * scale, 7 * scale),
                (200, 90, 100), 25)
    if label == 1:
        _draw_discs(img, rng, int(rng.integers(2, 5)), (9 * scale, 14 * scale),
                    (110, 60, 150), 25)
    else:
        # occasional small violet platelet so colour alone is not decisive
        _draw_discs(img, rng, int(rng.integers(0, 3)), (1.5 * scale, 3 * scale),
                    (110, 60, 150), 25)
    img += rng.normal(0, 6, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def smear_images(n, seed=0, size=128):
    """``n`` cartoon smears, alternating normal/cancer."""
    labels = [i % 2 for i in range(n)]
    imgs = []
    for i, lab in enumerate(labels):
        rng = np.random.default_rng([seed, i])
        imgs.append(smear_image(lab, rng, size))
    return imgs, labels


def write_corpus(root, images, labels, prefix="img"):
    """Save images as ``root/<class>/<prefix>NNNNN.png``; returns ``root``."""
    root = Path(root)
    for name in CLASS_NAMES:
        (root / name).mkdir(parents=True, exist_ok=True)
    for i, (img, lab) in enumerate(zip(images, labels)):
        save_image(img, root / CLASS_NAMES[lab] / f"{prefix}{i:05d}.png")
    return root

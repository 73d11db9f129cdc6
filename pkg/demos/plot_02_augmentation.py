"""
Label-preserving augmentation
=============================

Small corpora are expanded with flips, shifts, zooms and shears. Every
transform resamples with nearest-neighbour lookup and replicates the border,
so an augmented image contains only colours already present in its source.
Each variant draws from its own random stream keyed by
``(seed, source index, variant index)``, which makes a run reproducible and
independent of processing order.
"""

import tempfile
from pathlib import Path

import numpy as np

from smearnet.augment import AugmentPlan, flip, generate, random_variant, shear, variant_rng, zoom
from smearnet.imageio import scan_dataset
from smearnet.synthetic import smear_images, write_corpus

###############################################################################
# The geometric primitives on a tiny labelled grid, so the index mapping is
# visible.

grid = np.arange(16, dtype=np.uint8).reshape(4, 4, 1).repeat(3, axis=2)
print("grid:\n", grid[..., 0])
print("horizontal flip:\n", flip(grid, "horizontal")[..., 0])
print("zoom x2 about the centre:\n", zoom(grid, 2.0)[..., 0])
print("shear k=0.5:\n", shear(grid, 0.5)[..., 0])

###############################################################################
# A plan bundles the parameter ranges. ``random_variant`` composes a random
# flip with one affine made from shift, zoom and shear.

plan = AugmentPlan(seed=3, shift_range=0.1, zoom_range=(0.9, 1.1), shear_range=0.2)
img = smear_images(1, seed=1, size=64)[0][0]
a = random_variant(img, plan, variant_rng(3, 0, 0))
b = random_variant(img, plan, variant_rng(3, 0, 0))
print("same key, same variant:", np.array_equal(a, b))
print("no new colours:",
      set(map(tuple, a.reshape(-1, 3))) <= set(map(tuple, img.reshape(-1, 3))))

###############################################################################
# ``generate`` writes originals plus variants. With per-class targets the
# extra variants are spread as evenly as possible over the sources.

work = Path(tempfile.mkdtemp(prefix="smearnet-aug-"))
imgs, labels = smear_images(8, seed=2, size=64)
src = write_corpus(work / "src", imgs, labels)
targets = AugmentPlan(seed=3, targets={1: 20, 0: 16})
out = generate(targets, scan_dataset(src), src, work / "aug")
print("cancer:", sum(r.label for r in out), "normal:", sum(1 - r.label for r in out))
print("example names:", [r.path for r in out[:3]])

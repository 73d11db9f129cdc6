"""
Preparing an image corpus
=========================

A raw corpus arrives as two folders, ``cancer/`` and ``normal/``, often with
the same picture saved more than once. Preparation removes exact duplicates
(by decoded pixels, not file bytes), resizes every image to 256x256 with
nearest-neighbour sampling, and cleans it with a 3x3 median filter followed
by a 3x3 sharpening kernel.
"""

import tempfile
from pathlib import Path

import numpy as np

from smearnet.imageio import content_hash, dedup, load_image, save_image, scan_dataset
from smearnet.preprocess import PreprocessConfig, condition, median3, sharpen3
from smearnet.synthetic import smear_images, write_corpus

work = Path(tempfile.mkdtemp(prefix="smearnet-demo-"))

###############################################################################
# Build a small raw corpus of cartoon smears at mixed resolutions, then plant
# two duplicates: one byte-identical copy and one re-encoded as BMP.

imgs, labels = smear_images(12, seed=0, size=180)
raw = write_corpus(work / "raw", imgs, labels)
first = sorted((raw / "cancer").iterdir())[0]
save_image(load_image(first), raw / "cancer" / f"{first.stem}_copy.png")
save_image(load_image(first), raw / "cancer" / f"{first.stem}_copy.bmp")

records = scan_dataset(raw)
print(f"scanned {len(records)} files")

###############################################################################
# The hash only sees pixels, so the BMP copy collides with the PNG original.
# The lexicographically first path of each group is kept.

kept, removed = dedup(records)
print(f"kept {len(kept)}, removed {len(removed)}:", [r.path for r in removed])

###############################################################################
# Conditioning is resize, then median, then sharpen. The median removes
# isolated speckle; the sharpening kernel has unit DC gain, so flat regions
# keep their value while edges are boosted.

cfg = PreprocessConfig(target_size=256)
out = condition(load_image(raw / kept[0].path), cfg)
print("conditioned shape:", out.shape)

speckled = np.full((5, 5, 3), 100, np.uint8)
speckled[2, 2] = 255
print("median removes the spike:", median3(speckled)[2, 2])
print("sharpen keeps flat areas:", sharpen3(np.full((4, 4, 3), 77, np.uint8))[1, 1])

###############################################################################
# Conditioning changes the pixels, so the hash changes too; rerunning dedup on
# the prepared corpus finds nothing further to remove.

print("hash before:", kept[0].content_hash[:16], "after:", content_hash(out)[:16])
print("workspace:", work)

"""Seeded geometric augmentation with nearest-neighbour resampling.

Geometric transforms act on continuous pixel coordinates in which pixel
``(i, j)`` covers ``[j, j+1) x [i, i+1)`` and has its centre at
``(j + 0.5, i + 0.5)``. Output pixels are filled by inverse mapping their
centre into the source, taking the pixel that contains the mapped point and
clamping to the nearest edge pixel when it falls outside the raster.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInput, SingularTransform
from .imageio import CLASS_NAMES, DatasetRecord, check_image, content_hash, load_image, save_image

# absorbs float noise when a mapped coordinate lands on an exact pixel edge
_EDGE_EPS = 1e-9


def flip(img: np.ndarray, axis: str) -> np.ndarray:
    check_image(img)
    if axis == "horizontal":
        return img[:, ::-1].copy()
    if axis == "vertical":
        return img[::-1].copy()
    raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")


def affine_nearest(img: np.ndarray, m) -> np.ndarray:
    """Resample ``img`` under the forward map ``m`` (2x3, source -> output)."""
    check_image(img)
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (2, 3):
        raise ValueError(f"affine matrix must be 2x3, got {m.shape}")
    lin = m[:, :2]
    if np.linalg.det(lin) == 0.0:
        raise SingularTransform("affine map has a singular 2x2 part")
    inv = np.linalg.inv(lin)
    h, w = img.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    pts = np.stack([xs.ravel() + 0.5 - m[0, 2], ys.ravel() + 0.5 - m[1, 2]])
    src = inv @ pts
    sx = np.clip(np.floor(src[0] + _EDGE_EPS).astype(np.int64), 0, w - 1)
    sy = np.clip(np.floor(src[1] + _EDGE_EPS).astype(np.int64), 0, h - 1)
    return img[sy, sx].reshape(img.shape)


def shift_matrix(w: int, h: int, dx: float, dy: float) -> np.ndarray:
    return np.array([[1.0, 0.0, dx * w], [0.0, 1.0, dy * h]])


def zoom_matrix(w: int, h: int, factor: float) -> np.ndarray:
    cx, cy = w / 2.0, h / 2.0
    return np.array([[factor, 0.0, cx * (1.0 - factor)],
                     [0.0, factor, cy * (1.0 - factor)]])


def shear_matrix(w: int, h: int, k: float) -> np.ndarray:
    # x' = x + k (y - H/2): rows above and below the centre slide in opposite
    # directions, the middle row stays put
    return np.array([[1.0, k, -k * h / 2.0], [0.0, 1.0, 0.0]])


def shift(img: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Translate by ``dx`` widths and ``dy`` heights; vacated pixels replicate the edge."""
    if abs(dx) > 0.5 or abs(dy) > 0.5:
        raise ValueError("shift fractions must lie in [-0.5, 0.5]")
    h, w = check_image(img).shape[:2]
    return affine_nearest(img, shift_matrix(w, h, dx, dy))


def zoom(img: np.ndarray, factor: float) -> np.ndarray:
    """Magnify about the image centre; ``factor > 1`` enlarges the content."""
    if not 0.5 <= factor <= 2.0:
        raise ValueError("zoom factor must lie in [0.5, 2.0]")
    h, w = check_image(img).shape[:2]
    return affine_nearest(img, zoom_matrix(w, h, factor))


def shear(img: np.ndarray, k: float) -> np.ndarray:
    if abs(k) > 0.5:
        raise ValueError("shear factor must lie in [-0.5, 0.5]")
    h, w = check_image(img).shape[:2]
    return affine_nearest(img, shear_matrix(w, h, k))


@dataclass
class AugmentPlan:
    """What ``generate`` produces and how parameters are drawn.

    ``per_image`` is either one count for every source or a mapping from
    label to count. When ``targets`` (label -> total images) is set it takes
    precedence and variants are spread over the sources of each class so
    the totals are hit exactly.
    """

    seed: int = 0
    per_image: int | dict = 0
    targets: dict | None = None
    flip_prob: float = 0.5
    shift_range: float = 0.1
    zoom_range: tuple = (0.9, 1.1)
    shear_range: float = 0.2
    op_pool: tuple = ("flip_h", "flip_v", "shift", "zoom", "shear")

    def __post_init__(self):
        if not 0.0 <= self.shift_range <= 0.2:
            raise ValueError("shift_range must lie in [0, 0.2]")
        lo, hi = self.zoom_range
        if not 0.8 <= lo <= hi <= 1.25:
            raise ValueError("zoom_range must lie within [0.8, 1.25]")
        if not 0.0 <= self.shear_range <= 0.3:
            raise ValueError("shear_range must lie in [0, 0.3]")
        unknown = set(self.op_pool) - {"flip_h", "flip_v", "shift", "zoom", "shear"}
        if unknown:
            raise ValueError(f"unknown augmentation ops: {sorted(unknown)}")
        counts = self.per_image.values() if isinstance(self.per_image, dict) else [self.per_image]
        if any(c < 0 for c in counts):
            raise ValueError("per_image must be >= 0")

    def variant_counts(self, labels) -> list[int]:
        """Number of augmented variants to emit for each source, in order."""
        labels = list(labels)
        if self.targets is None:
            per = self.per_image
            return [per.get(lab, 0) if isinstance(per, dict) else per for lab in labels]
        counts = [0] * len(labels)
        for lab in set(labels):
            idx = [i for i, l in enumerate(labels) if l == lab]
            target = self.targets.get(lab, len(idx))
            extra = target - len(idx)
            if extra < 0:
                raise ValueError(
                    f"target {target} for class {CLASS_NAMES[lab]} is below "
                    f"its {len(idx)} source images")
            base, rem = divmod(extra, len(idx))
            for rank, i in enumerate(idx):
                counts[i] = base + (1 if rank < rem else 0)
        return counts

    def to_json(self) -> dict:
        d = asdict(self)
        if isinstance(self.per_image, dict):
            d["per_image"] = {CLASS_NAMES[k]: v for k, v in self.per_image.items()}
        if self.targets is not None:
            d["targets"] = {CLASS_NAMES[k]: v for k, v in self.targets.items()}
        d["zoom_range"] = list(self.zoom_range)
        d["op_pool"] = list(self.op_pool)
        return d


def variant_rng(seed: int, source_index: int, variant_index: int) -> np.random.Generator:
    """Independent stream per (seed, source, variant); scheduling order is irrelevant."""
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, source_index, variant_index])))


def random_variant(img: np.ndarray, plan: AugmentPlan, rng: np.random.Generator) -> np.ndarray:
    """Draw one augmentation from ``plan`` and apply it.

    Flips are exact index reversals. Shift, zoom and shear are composed
    into a single affine map so the image is resampled once.
    """
    h, w = img.shape[:2]
    pool = plan.op_pool
    # all draws happen unconditionally so the stream layout is fixed
    flips = rng.random(2) < plan.flip_prob
    dx, dy = rng.uniform(-plan.shift_range, plan.shift_range, size=2)
    factor = rng.uniform(*plan.zoom_range)
    k = rng.uniform(-plan.shear_range, plan.shear_range)

    out = img
    if "flip_h" in pool and flips[0]:
        out = flip(out, "horizontal")
    if "flip_v" in pool and flips[1]:
        out = flip(out, "vertical")

    m = np.eye(3)
    if "shear" in pool:
        m = np.vstack([shear_matrix(w, h, k), [0, 0, 1]]) @ m
    if "zoom" in pool:
        m = np.vstack([zoom_matrix(w, h, factor), [0, 0, 1]]) @ m
    if "shift" in pool:
        m = np.vstack([shift_matrix(w, h, dx, dy), [0, 0, 1]]) @ m
    if not np.array_equal(m, np.eye(3)):
        out = affine_nearest(out, m[:2])
    return out


def generate(plan: AugmentPlan, sources, src_root, out_root) -> list[DatasetRecord]:
    """Write the sources and their augmented variants under ``out_root``.

    Every source is re-encoded as ``<stem>.png`` and each variant as
    ``<stem>_augNNN.png`` in the same class directory. Returns the records of
    all written files, sources first within each source group.
    """
    sources = list(sources)
    if not sources:
        raise EmptyInput("generate needs at least one source record")
    src_root, out_root = Path(src_root), Path(out_root)
    for name in CLASS_NAMES:
        (out_root / name).mkdir(parents=True, exist_ok=True)

    counts = plan.variant_counts(r.label for r in sources)
    out = []
    for si, (rec, n_var) in enumerate(zip(sources, counts)):
        img = load_image(src_root / rec.path)
        cls = CLASS_NAMES[rec.label]
        stem = Path(rec.path).stem
        rel = f"{cls}/{stem}.png"
        save_image(img, out_root / rel)
        out.append(DatasetRecord(rel, rec.label, content_hash=content_hash(img)))
        for vi in range(n_var):
            aug = random_variant(img, plan, variant_rng(plan.seed, si, vi))
            rel = f"{cls}/{stem}_aug{vi:03d}.png"
            save_image(aug, out_root / rel)
            out.append(DatasetRecord(rel, rec.label, content_hash=content_hash(aug)))
    return out


def write_plan(plan: AugmentPlan, counts: dict, path) -> None:
    """Record the plan and resulting per-class counts as JSON."""
    doc = {"plan": plan.to_json(), "class_counts": counts}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


__all__ = [
    "AugmentPlan", "affine_nearest", "flip", "generate", "random_variant",
    "shear", "shift", "variant_rng", "write_plan", "zoom",
]

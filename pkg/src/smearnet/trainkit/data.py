"""Train/val/test splitting and batch assembly."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import EmptyClass, IoFailure
from ..imageio import DatasetRecord, load_image
from ..preprocess import resize_nearest

SPLIT_NAMES = ("train", "val", "test")


@dataclass
class DatasetManifest:
    """Records with their split assignment, plus where the files live."""

    records: list
    root: str | None = None
    seed: int | None = None
    ratios: tuple | None = None

    def split(self, name: str) -> list:
        return [r for r in self.records if r.split == name]

    def counts(self) -> dict:
        return {name: sum(r.split == name for r in self.records) for name in SPLIT_NAMES}

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "seed": self.seed,
            "ratios": list(self.ratios) if self.ratios else None,
            "records": [{"path": r.path, "label": r.label, "split": r.split,
                         "hash": r.content_hash} for r in self.records],
        }

    def save(self, path) -> None:
        try:
            Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        records = [DatasetRecord(r["path"], int(r["label"]), r["split"], r.get("hash", ""))
                   for r in doc["records"]]
        ratios = tuple(doc["ratios"]) if doc.get("ratios") else None
        return cls(records, doc.get("root"), doc.get("seed"), ratios)


def _split_counts(n, ratios):
    # floor for val and test, the remainder goes to train; the epsilon keeps
    # e.g. 3030 * 0.2 from flooring to 605 through representation error
    n_val = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    return n - n_val - n_test, n_val, n_test


def split_dataset(records, ratios=(0.6, 0.2, 0.2), seed=0, stratify=True, root=None):
    """Assign every record to train, val or test after a seeded shuffle.

    With ``stratify`` each class is shuffled and cut independently, so class
    proportions follow the ratios to within one sample per split.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    records = list(records)
    for label, name in ((0, "normal"), (1, "cancer")):
        if not any(r.label == label for r in records):
            raise EmptyClass(f"no {name} records to split")

    groups = [[i for i, r in enumerate(records) if r.label == lab] for lab in (0, 1)] \
        if stratify else [list(range(len(records)))]
    assigned = [None] * len(records)
    for gi, idx in enumerate(groups):
        rng = np.random.default_rng([seed, gi])
        order = [idx[j] for j in rng.permutation(len(idx))]
        n_train, n_val, _ = _split_counts(len(order), ratios)
        for rank, i in enumerate(order):
            if rank < n_train:
                assigned[i] = "train"
            elif rank < n_train + n_val:
                assigned[i] = "val"
            else:
                assigned[i] = "test"
    out = [r.with_split(s) for r, s in zip(records, assigned)]
    return DatasetManifest(out, None if root is None else str(root), seed, ratios)


@dataclass
class ImageLoader:
    """Reads records from ``root`` and caches them at the network input size.

    Cached images stay ``uint8`` so a few thousand 227x227 images fit in RAM;
    conversion to floats in ``[0, 1]`` happens per batch.
    """

    root: str
    size: int
    cache: dict = field(default_factory=dict)

    def image(self, rec: DatasetRecord) -> np.ndarray:
        img = self.cache.get(rec.path)
        if img is None:
            img = load_image(Path(self.root) / rec.path)
            if img.shape[:2] != (self.size, self.size):
                img = resize_nearest(img, self.size, self.size)
            self.cache[rec.path] = img
        return img

    def batch(self, records, dtype=np.float32) -> np.ndarray:
        arr = np.stack([self.image(r) for r in records]).transpose(0, 3, 1, 2)
        return arr.astype(dtype) / np.dtype(dtype).type(255)

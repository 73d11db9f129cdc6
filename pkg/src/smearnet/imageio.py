"""Image decoding/encoding, dataset enumeration and exact-duplicate removal.

Images travel through the pipeline as ``uint8`` arrays of shape
``(height, width, 3)``. Grayscale files are promoted to RGB at decode time.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptImage, EmptyClass, IoFailure, UnsupportedFormat

CLASS_NAMES = ("normal", "cancer")
LABELS = {"normal": 0, "cancer": 1}
SPLITS = ("train", "val", "test", "unassigned")
IMAGE_SUFFIXES = (".png", ".bmp", ".ppm")

_MAGIC = {
    b"\x89PNG\r\n\x1a\n": "PNG",
    b"BM": "BMP",
    b"P6": "PPM",
}


@dataclass(frozen=True)
class DatasetRecord:
    path: str
    label: int
    split: str = "unassigned"
    content_hash: str = ""

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")

    def with_split(self, split: str) -> "DatasetRecord":
        return replace(self, split=split)


def check_image(img: np.ndarray) -> np.ndarray:
    """Validate the in-memory image contract and return ``img`` unchanged."""
    if not isinstance(img, np.ndarray) or img.dtype != np.uint8:
        raise TypeError("image must be a uint8 numpy array")
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must have shape (H, W, 3), got {img.shape}")
    return img


def _sniff(head: bytes) -> str:
    for magic, fmt in _MAGIC.items():
        if head.startswith(magic):
            return fmt
    raise UnsupportedFormat("unrecognised image signature")


def load_image(path) -> np.ndarray:
    """Decode a PNG, BMP or binary PPM file into an RGB ``uint8`` array.

    Raises
    ------
    UnsupportedFormat
        The file does not start with a known signature.
    CorruptImage
        The header or pixel payload is truncated or inconsistent.
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    fmt = _sniff(head)

    try:
        with Image.open(path, formats=[fmt]) as im:
            im.load()
            if im.mode in ("L", "RGB"):
                arr = np.asarray(im)
            elif im.mode in ("P", "RGBA", "LA", "1"):
                arr = np.asarray(im.convert("RGB"))
            else:
                raise UnsupportedFormat(f"{path}: unsupported pixel mode {im.mode}")
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc

    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return np.ascontiguousarray(arr, dtype=np.uint8)


def save_image(img: np.ndarray, path) -> None:
    """Write ``img`` losslessly; the format follows the file suffix."""
    check_image(img)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in IMAGE_SUFFIXES:
        raise UnsupportedFormat(f"cannot encode {suffix!r}; use .png, .bmp or .ppm")
    if not path.parent.is_dir():
        raise IoFailure(f"directory does not exist: {path.parent}")
    try:
        if suffix == ".ppm":
            h, w, _ = img.shape
            with open(path, "wb") as fh:
                fh.write(b"P6\n%d %d\n255\n" % (w, h))
                fh.write(np.ascontiguousarray(img).tobytes())
        else:
            Image.fromarray(img, mode="RGB").save(path, format=suffix[1:].upper())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def content_hash(img: np.ndarray) -> str:
    """SHA-256 over the decoded raster (dimensions included), as hex."""
    h, w, c = img.shape
    digest = hashlib.sha256(b"%d,%d,%d;" % (h, w, c))
    digest.update(np.ascontiguousarray(img).tobytes())
    return digest.hexdigest()


def scan_dataset(root) -> list[DatasetRecord]:
    """Enumerate ``root/cancer`` and ``root/normal`` into dataset records.

    Files that fail to decode are skipped. Records are sorted by their
    root-relative POSIX path so the order is stable across runs.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"dataset root does not exist: {root}")
    records = []
    for name in ("cancer", "normal"):
        class_dir = root / name
        found = 0
        if class_dir.is_dir():
            for entry in sorted(os.listdir(class_dir)):
                file = class_dir / entry
                if file.suffix.lower() not in IMAGE_SUFFIXES or not file.is_file():
                    continue
                try:
                    img = load_image(file)
                except (UnsupportedFormat, CorruptImage):
                    continue
                records.append(DatasetRecord(
                    path=f"{name}/{entry}",
                    label=LABELS[name],
                    content_hash=content_hash(img),
                ))
                found += 1
        if found == 0:
            raise EmptyClass(f"no decodable images under {class_dir}")
    records.sort(key=lambda r: r.path)
    return records


def dedup(records):
    """Split records into (kept, removed) by exact pixel hash.

    Within each group of equal hashes the lexicographically smallest path
    survives.
    """
    if any(not r.content_hash for r in records):
        raise ValueError("every record needs a content_hash before dedup")
    first = {}
    for rec in sorted(records, key=lambda r: r.path):
        first.setdefault(rec.content_hash, rec.path)
    kept = [r for r in records if first[r.content_hash] == r.path]
    removed = [r for r in records if first[r.content_hash] != r.path]
    return kept, removed


def write_manifest(records, path) -> None:
    rows = [
        {"path": r.path, "label": r.label, "split": r.split, "hash": r.content_hash}
        for r in records
    ]
    try:
        Path(path).write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_manifest(path) -> list[DatasetRecord]:
    try:
        rows = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return [
        DatasetRecord(path=r["path"], label=int(r["label"]), split=r["split"],
                      content_hash=r.get("hash", ""))
        for r in rows
    ]

"""Checkpoint directories: ``manifest.json`` plus one raw blob per parameter.

Layout::

    <dir>/manifest.json         format_version, model description, parameter table
    <dir>/<param-name>.bin      little-endian IEEE-754 values, C order
    <dir>/history.csv           epoch,train_loss,train_acc,val_loss,val_acc
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import IoFailure, ManifestCorrupt, VersionMismatch
from ..models import from_description
from .loop import EpochRecord

FORMAT_VERSION = 1
HISTORY_HEADER = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")
_PRECISION = {np.dtype(np.float32): ("single", "<f4"), np.dtype(np.float64): ("double", "<f8")}


def write_history(records, path) -> None:
    """Write epoch records as CSV; floats use ``repr`` so they round-trip."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_HEADER)
            for r in records:
                w.writerow([r.epoch, repr(r.train_loss), repr(r.train_accuracy),
                            repr(r.val_loss), repr(r.val_accuracy)])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_history(path) -> list[EpochRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [EpochRecord(int(r["epoch"]), float(r["train_loss"]), float(r["train_acc"]),
                        float(r["val_loss"]), float(r["val_acc"])) for r in rows]


def save_checkpoint(model, records, path, extra=None) -> None:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {path}: {exc}") from exc
    precision, code = _PRECISION[model.dtype]
    table = []
    for p in model.parameters:
        fname = f"{p.name}.bin"
        blob = np.ascontiguousarray(p.data, dtype=code).tobytes()
        try:
            (path / fname).write_bytes(blob)
        except OSError as exc:
            raise IoFailure(f"cannot write {path / fname}: {exc}") from exc
        table.append({"name": p.name, "shape": list(p.shape), "dtype": code,
                      "file": fname, "nbytes": len(blob)})
    doc = {
        "format_version": FORMAT_VERSION,
        **model.describe(),
        "precision": precision,
        "seed": model.seed,
        "epoch": records[-1].epoch if records else 0,
        "parameters": table,
        "history": [asdict(r) for r in records],
    }
    if extra:
        doc["extra"] = extra
    try:
        (path / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write manifest in {path}: {exc}") from exc
    write_history(records, path / "history.csv")


def load_checkpoint(path):
    """Return ``(model, records, manifest_dict)`` from a checkpoint directory.

    Raises
    ------
    VersionMismatch
        The manifest declares a format version other than 1.
    ManifestCorrupt
        Missing/unparseable manifest, or a blob whose byte length disagrees
        with its declared shape.
    """
    path = Path(path)
    try:
        doc = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ManifestCorrupt(f"no manifest.json in {path}") from exc
    except (OSError, ValueError) as exc:
        raise ManifestCorrupt(f"unreadable manifest in {path}: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"checkpoint format {version!r}, this build reads {FORMAT_VERSION}")

    try:
        dtype = np.float32 if doc["precision"] == "single" else np.float64
        model = from_description(doc, dtype)
        model.seed = doc.get("seed", 0)
        params = model.named_parameters()
        table = doc["parameters"]
        records = [EpochRecord(**r) for r in doc.get("history", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestCorrupt(f"malformed manifest in {path}: {exc}") from exc
    if [e["name"] for e in table] != [p.name for p in model.parameters]:
        raise ManifestCorrupt("parameter table does not match the described layers")

    for entry in table:
        p = params[entry["name"]]
        if tuple(entry["shape"]) != p.shape:
            raise ManifestCorrupt(f"{entry['name']}: shape {entry['shape']} != {list(p.shape)}")
        code = np.dtype(entry["dtype"])
        try:
            blob = (path / entry["file"]).read_bytes()
        except OSError as exc:
            raise ManifestCorrupt(f"missing blob {entry['file']}: {exc}") from exc
        if len(blob) != p.data.size * code.itemsize:
            raise ManifestCorrupt(
                f"{entry['file']}: {len(blob)} bytes, expected {p.data.size * code.itemsize}")
        p.data = np.frombuffer(blob, dtype=code).reshape(p.shape).astype(dtype)
    return model, records, doc

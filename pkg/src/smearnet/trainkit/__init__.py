"""Dataset splitting, the training loop and checkpoint persistence."""

from .checkpoint import (
    FORMAT_VERSION,
    load_checkpoint,
    read_history,
    save_checkpoint,
    write_history,
)
from .data import DatasetManifest, ImageLoader, split_dataset
from .loop import EpochRecord, TrainConfig, evaluate, fit, predict

__all__ = [
    "FORMAT_VERSION", "DatasetManifest", "EpochRecord", "ImageLoader", "TrainConfig",
    "evaluate", "fit", "load_checkpoint", "predict", "read_history", "save_checkpoint",
    "split_dataset", "write_history",
]

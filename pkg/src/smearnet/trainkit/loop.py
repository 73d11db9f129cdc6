"""Mini-batch training with per-epoch train/validation metrics."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..engine.optim import make_optimizer
from ..errors import Diverged, EmptyClass, ShapeMismatch
from .data import ImageLoader

log = logging.getLogger(__name__)

PRECISIONS = {"single": np.float32, "double": np.float64}


@dataclass(frozen=True)
class TrainConfig:
    arch: str = "thanh_net"
    epochs: int = 10
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    precision: str = "single"
    momentum: float = 0.9
    threads: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be 'single' or 'double', got {self.precision!r}")

    @property
    def dtype(self):
        return PRECISIONS[self.precision]

    def to_json(self):
        return asdict(self)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


def _labels(records):
    return np.array([r.label for r in records], dtype=np.int64)


def warm_cache(loader, records, threads):
    """Decode every record up front on ``threads`` workers."""
    if threads <= 1:
        for r in records:
            loader.image(r)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(loader.image, records))


def predict(model, records, loader, batch_size=128):
    """Head outputs for ``records`` in order, as one ``[N, units]`` array."""
    outs = []
    for s in range(0, len(records), batch_size):
        chunk = records[s:s + batch_size]
        outs.append(model.forward(loader.batch(chunk, model.dtype)).data)
    return np.concatenate(outs)


def evaluate(model, records, loader, batch_size=128):
    """Mean loss and accuracy of ``model`` over ``records``."""
    if not records:
        return float("nan"), float("nan")
    out = predict(model, records, loader, batch_size)
    y = _labels(records)
    loss = float(model.loss_of(out, y).data)
    acc = float(np.mean(model.decide(out) == y))
    return loss, acc


def fit(config: TrainConfig, manifest, model, loader=None, on_epoch=None):
    """Train ``model`` for ``config.epochs`` epochs on the manifest's train split.

    Each epoch shuffles the training records with a stream keyed by
    ``(seed, epoch)``, steps the optimizer once per batch (the last short
    batch included), then evaluates train and val in full. ``on_epoch`` is
    called as ``on_epoch(model, records)`` after every epoch; a true return
    value stops training early.

    Returns the model after the final epoch and the list of
    :class:`EpochRecord`.

    Raises
    ------
    Diverged
        The training loss became NaN or infinite.
    """
    train, val = manifest.split("train"), manifest.split("val")
    if not train or not val:
        raise EmptyClass("fit needs non-empty train and val splits")
    size = model.input_shape[-1]
    if len(model.input_shape) != 3 or model.input_shape[1] != size:
        raise ShapeMismatch(f"{model.name} does not take square image inputs")
    if loader is None:
        loader = ImageLoader(manifest.root, size)
    elif loader.size != size:
        raise ShapeMismatch(f"loader yields {loader.size}px images, {model.name} needs {size}px")
    if model.dtype != np.dtype(config.dtype):
        model.astype(config.dtype)

    warm_cache(loader, train + val, config.threads)
    opt = make_optimizer(config.optimizer, model.parameters, config.learning_rate,
                         **({"momentum": config.momentum} if config.optimizer == "sgd" else {}))
    y_train = _labels(train)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = np.random.default_rng([config.seed, epoch]).permutation(len(train))
        for s in range(0, len(order), config.batch_size):
            idx = order[s:s + config.batch_size]
            x = loader.batch([train[i] for i in idx], model.dtype)
            opt.zero_grad()
            loss = model.loss(x, y_train[idx])
            value = float(loss.data)
            if not math.isfinite(value):
                raise Diverged(f"loss became {value} in epoch {epoch}")
            loss.backward()
            opt.step()

        tr_loss, tr_acc = evaluate(model, train, loader, config.batch_size)
        va_loss, va_acc = evaluate(model, val, loader, config.batch_size)
        if not (math.isfinite(tr_loss) and math.isfinite(va_loss)):
            raise Diverged(f"evaluation loss is not finite after epoch {epoch}")
        rec = EpochRecord(epoch, tr_loss, tr_acc, va_loss, va_acc)
        history.append(rec)
        log.info("epoch %d train_loss=%.4f train_acc=%.4f val_loss=%.4f val_acc=%.4f",
                 epoch, tr_loss, tr_acc, va_loss, va_acc)
        if on_epoch is not None and on_epoch(model, history):
            break
    return model, history

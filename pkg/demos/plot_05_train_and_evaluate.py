"""
Training and evaluating on synthetic smears
===========================================

The real smear images cannot be redistributed, so this walkthrough trains
the compact network on generated smears: pale fields of red cells where the
"cancer" class also carries a few large violet nuclei. The split is
stratified 50/25/25; training uses Adam at 1e-3 with mini-batches of 16.
Expect a few minutes on one CPU core.
"""

import tempfile
from pathlib import Path

from smearnet import evalkit
from smearnet.imageio import scan_dataset
from smearnet.models import build
from smearnet.synthetic import smear_images, write_corpus
from smearnet.trainkit import ImageLoader, TrainConfig, fit, load_checkpoint, predict, save_checkpoint, split_dataset

work = Path(tempfile.mkdtemp(prefix="smearnet-train-"))
imgs, labels = smear_images(400, seed=0, size=128)
root = write_corpus(work / "data", imgs, labels)
manifest = split_dataset(scan_dataset(root), (0.5, 0.25, 0.25), seed=0, root=root)
print("split:", manifest.counts())

###############################################################################
# Train for ten epochs, printing the per-epoch metrics as they arrive.


def show(model, history):
    r = history[-1]
    print(f"epoch {r.epoch:2d}  loss {r.train_loss:.4f}  train {r.train_accuracy:.3f}  "
          f"val {r.val_accuracy:.3f}")


model, history = fit(TrainConfig(epochs=10, batch_size=16), manifest, build("thanh_net"),
                     on_epoch=show)
save_checkpoint(model, history, work / "model")

###############################################################################
# Score the held-out test split from the reloaded checkpoint.

model, _, _ = load_checkpoint(work / "model")
test = manifest.split("test")
out = predict(model, test, ImageLoader(str(root), 128))
matrix = evalkit.confusion([r.label for r in test], model.decide(out))
rep = evalkit.report(matrix)
print(evalkit.format_matrix(matrix))
print(evalkit.format_table(rep))
evalkit.export_report(rep, work / "report.json")
evalkit.export_curves(history, work / "curves.csv")

###############################################################################
# Accuracy curves, if matplotlib is installed.

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    epochs = [r.epoch for r in history]
    plt.plot(epochs, [r.train_accuracy for r in history], label="train")
    plt.plot(epochs, [r.val_accuracy for r in history], label="validation")
    plt.xlabel("epoch")
    plt.ylabel("accuracy")
    plt.legend()
    plt.savefig(work / "curves.png", dpi=100)
    print("curves saved to", work / "curves.png")

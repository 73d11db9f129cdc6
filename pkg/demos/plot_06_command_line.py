"""
The command-line pipeline
=========================

The same steps are available as ``smearnet`` subcommands (also
``python -m smearnet``): ``prepare``, ``augment``, ``train``, ``eval`` and
``predict``. Each prints ``key=value`` lines and records its arguments in
``run-config.json`` next to its outputs. Here they are driven in-process on a
small corpus, so the run takes about a minute.
"""

import tempfile
from pathlib import Path

from smearnet.cli import main
from smearnet.imageio import save_image
from smearnet.synthetic import smear_images, write_corpus

work = Path(tempfile.mkdtemp(prefix="smearnet-cli-"))
imgs, labels = smear_images(80, seed=4, size=200)
write_corpus(work / "raw", imgs, labels)


def run(*argv):
    print("$ smearnet", " ".join(map(str, argv)), flush=True)
    code = main([str(a) for a in argv])
    print(f"(exit {code})\n", flush=True)


run("prepare", "--in", work / "raw", "--out", work / "prepared")
# the split happens after augmentation, so variants of one source can land in
# different splits and validation scores read optimistic
run("augment", "--in", work / "prepared", "--out", work / "augmented",
    "--target-per-class", "cancer=80,normal=80", "--seed", 1)
run("train", "--arch", "thanh_net", "--data", work / "augmented", "--epochs", 6,
    "--batch", 8, "--out", work / "model")
run("eval", "--model", work / "model", "--report", work / "report.json")

single = smear_images(1, seed=99, size=300)[0][0]
save_image(single, work / "new_smear.png")
run("predict", "--model", work / "model", "--image", work / "new_smear.png")

###############################################################################
# Six short epochs on 96 training images give a usable but noisy model. On
# these synthetic smears the sharpening step also amplifies the generator's
# per-pixel noise; ``prepare --no-sharpen`` typically trains faster here.

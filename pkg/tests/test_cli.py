import json
import re

import numpy as np
import pytest

from smearnet import cli
from smearnet.errors import Diverged
from smearnet.imageio import load_image, read_manifest, save_image
from smearnet.models import FLATTEN, SIGMOID, ModelGraph, conv, dense
from smearnet.synthetic import smear_images, write_corpus
from smearnet.trainkit import save_checkpoint

from conftest import make_tree, random_image


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def kv(line):
    return dict(part.split("=", 1) for part in line.split())


def test_prepare_dedups_resizes_and_is_idempotent(tmp_path, capsys, rng):
    dup = random_image(rng, 20, 30)
    make_tree(tmp_path / "raw", {"a": dup, "b": dup, "c": random_image(rng, 9, 9)},
              {"n": random_image(rng, 40, 12)})
    code, out, _ = run(capsys, "prepare", "--in", tmp_path / "raw", "--out", tmp_path / "p",
                       "--size", 32)
    assert code == 0
    assert kv(out.splitlines()[-1]) == {"kept": "3", "removed": "1"}
    assert out.startswith("config=")
    written = read_manifest(tmp_path / "p" / "manifest.json")
    assert [r.path for r in written] == ["cancer/a.png", "cancer/c.png", "normal/n.png"]
    for r in written:
        assert load_image(tmp_path / "p" / r.path).shape == (32, 32, 3)
    assert [r.path for r in read_manifest(tmp_path / "p" / "removed.json")] == ["cancer/b.png"]
    assert json.loads((tmp_path / "p" / "run-config.json").read_text())["size"] == 32

    code, out, _ = run(capsys, "prepare", "--in", tmp_path / "p", "--out", tmp_path / "p2",
                       "--size", 32)
    assert code == 0 and kv(out.splitlines()[-1])["removed"] == "0"


def test_prepare_errors(tmp_path, capsys):
    code, _, err = run(capsys, "prepare", "--in", tmp_path / "missing", "--out", tmp_path / "o")
    assert code == 1 and "does not exist" in err
    code, _, _ = run(capsys, "prepare", "--out", tmp_path / "o")
    assert code == 1
    (tmp_path / "raw" / "cancer").mkdir(parents=True)
    (tmp_path / "raw" / "normal").mkdir()
    code, _, err = run(capsys, "prepare", "--in", tmp_path / "raw", "--out", tmp_path / "o")
    assert code == 1


def test_unknown_arch_is_usage_error(tmp_path, capsys):
    code, _, _ = run(capsys, "train", "--arch", "nope", "--data", tmp_path, "--out", tmp_path)
    assert code == 1


def test_augment_targets(tmp_path, capsys, rng):
    make_tree(tmp_path / "p", {f"c{i}": random_image(rng, 6, 6) for i in range(3)},
              {f"n{i}": random_image(rng, 6, 6) for i in range(2)})
    code, out, _ = run(capsys, "augment", "--in", tmp_path / "p", "--out", tmp_path / "a",
                       "--target-per-class", "cancer=10,normal=7", "--seed", 4)
    assert code == 0
    assert kv(out.splitlines()[-1]) == {"cancer": "10", "normal": "7", "total": "17"}
    doc = json.loads((tmp_path / "a" / "augment-plan.json").read_text())
    assert doc["class_counts"] == {"normal": 7, "cancer": 10}
    assert len(list((tmp_path / "a").glob("*/*.png"))) == 17


def test_augment_rejects_wide_ranges(tmp_path, capsys, rng):
    make_tree(tmp_path / "p", {"c": random_image(rng)}, {"n": random_image(rng)})
    code, _, err = run(capsys, "augment", "--in", tmp_path / "p", "--out", tmp_path / "a",
                       "--shift", 0.5)
    assert code == 1


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    imgs, labels = smear_images(16, seed=1, size=128)
    write_corpus(root / "data", imgs, labels)
    code = cli.main(["train", "--arch", "thanh_net", "--data", str(root / "data"),
                     "--epochs", "2", "--batch", "8", "--ratios", "0.5,0.25,0.25",
                     "--out", str(root / "model")])
    assert code == 0
    return root


def test_train_outputs(trained, capsys):
    model = trained / "model"
    for name in ("manifest.json", "history.csv", "dataset-manifest.json", "run-config.json",
                 "conv1.weight.bin", "dense1.bias.bin"):
        assert (model / name).is_file(), name
    assert len((model / "history.csv").read_text().splitlines()) == 3
    doc = json.loads((model / "manifest.json").read_text())
    assert doc["model"] == "thanh_net" and doc["precision"] == "single"
    ds = json.loads((model / "dataset-manifest.json").read_text())
    assert sorted({r["split"] for r in ds["records"]}) == ["test", "train", "val"]


def test_train_stdout(tmp_path, capsys):
    imgs, labels = smear_images(8, seed=2, size=128)
    write_corpus(tmp_path / "d", imgs, labels)
    code, out, _ = run(capsys, "train", "--arch", "thanh_net", "--data", tmp_path / "d",
                       "--epochs", 1, "--batch", 4, "--ratios", "0.5,0.25,0.25",
                       "--out", tmp_path / "m")
    assert code == 0
    lines = out.splitlines()
    assert kv(lines[1]) == {"split": "4/2/2"}
    assert kv(lines[2])["epoch"] == "1"
    assert set(kv(lines[-1])) == {"train_acc", "val_acc"}


def test_eval(trained, capsys, tmp_path):
    code, out, _ = run(capsys, "eval", "--model", trained / "model", "--report", tmp_path / "r.json")
    assert code == 0
    last = kv(out.splitlines()[-1])
    assert last["split"] == "test" and last["n"] == "4"
    assert 0 <= float(last["accuracy"]) <= 1
    doc = json.loads((tmp_path / "r.json").read_text())
    assert sum(map(sum, doc["matrix"])) == 4
    assert "precision" in out and "true/pred" in out


def test_predict_single_line(trained, capsys, tmp_path):
    img = smear_images(1, seed=50, size=300)[0][0]
    save_image(img, tmp_path / "x.png")
    code, out, err = run(capsys, "predict", "--model", trained / "model", "--image", tmp_path / "x.png")
    assert code == 0
    assert re.fullmatch(r"label=(normal|cancer) p=[01]\.\d{6} ms=\d+\.\d\n", out)
    assert err.startswith("config=")


def test_predict_corrupted_checkpoint(trained, capsys, tmp_path):
    import shutil
    bad = tmp_path / "bad"
    shutil.copytree(trained / "model", bad)
    blob = bad / "conv2.weight.bin"
    blob.write_bytes(blob.read_bytes()[:100])
    save_image(random_image(np.random.default_rng(0), 10, 10), tmp_path / "x.png")
    code, out, err = run(capsys, "predict", "--model", bad, "--image", tmp_path / "x.png")
    assert code == 1 and out == "" and "conv2.weight.bin" in err


def test_predict_threshold_tie(tmp_path, capsys, rng):
    # all-zero weights give P(cancer) = sigmoid(0) = 0.5 exactly
    model = ModelGraph("probe", 8, [conv(1, 3), FLATTEN, dense(1), SIGMOID])
    for p in model.parameters:
        p.data[:] = 0
    save_checkpoint(model, [], tmp_path / "ck")
    save_image(random_image(rng, 12, 12), tmp_path / "x.png")
    base = ["predict", "--model", tmp_path / "ck", "--image", tmp_path / "x.png", "--size", 8]
    code, out, _ = run(capsys, *base)
    assert code == 0 and kv(out)["label"] == "cancer" and kv(out)["p"] == "0.500000"
    code, out, _ = run(capsys, *base, "--threshold", 0.6)
    assert kv(out)["label"] == "normal"


def test_diverged_exit_code(tmp_path, capsys, monkeypatch):
    imgs, labels = smear_images(8, seed=3, size=16)
    write_corpus(tmp_path / "d", imgs, labels)

    def boom(*a, **k):
        raise Diverged("loss became nan in epoch 1")

    monkeypatch.setattr(cli, "fit", boom)
    code, _, err = run(capsys, "train", "--arch", "thanh_net", "--data", tmp_path / "d",
                       "--epochs", 1, "--out", tmp_path / "m")
    assert code == 2 and "nan" in err


def _tiny_distinct(n, start=0):
    return {f"i{k:04d}": np.full((2, 2, 3), [k % 256, k // 256, 7], np.uint8)
            for k in range(start, start + n)}


def test_prepare_630_with_43_duplicates(tmp_path, capsys):
    cancer = _tiny_distinct(460)
    normal = _tiny_distinct(127, start=460)
    # 43 copies of existing images under new names
    for j, k in enumerate(range(0, 430, 10)):
        cancer[f"z_dup{j:02d}"] = cancer[f"i{k:04d}"]
    make_tree(tmp_path / "raw", cancer, normal)
    code, out, _ = run(capsys, "prepare", "--in", tmp_path / "raw", "--out", tmp_path / "p",
                       "--size", 8)
    assert code == 0
    assert kv(out.splitlines()[-1]) == {"kept": "587", "removed": "43"}


def test_augment_to_3030(tmp_path, capsys):
    make_tree(tmp_path / "p", _tiny_distinct(480), _tiny_distinct(107, start=480))
    code, out, _ = run(capsys, "augment", "--in", tmp_path / "p", "--out", tmp_path / "a",
                       "--target-per-class", "cancer=1550,normal=1480")
    assert code == 0
    assert kv(out.splitlines()[-1]) == {"cancer": "1550", "normal": "1480", "total": "3030"}


def test_augment_pass_through_and_determinism(tmp_path, capsys, rng):
    make_tree(tmp_path / "p", {f"c{i}": random_image(rng, 9, 9) for i in range(3)},
              {f"n{i}": random_image(rng, 9, 9) for i in range(3)})
    code, out, _ = run(capsys, "augment", "--in", tmp_path / "p", "--out", tmp_path / "same",
                       "--target-per-class", 3)
    assert code == 0 and kv(out.splitlines()[-1])["total"] == "6"
    assert not list((tmp_path / "same").glob("*/*_aug*"))
    trees = []
    for name in ("x", "y"):
        run(capsys, "augment", "--in", tmp_path / "p", "--out", tmp_path / name,
            "--target-per-class", 8, "--seed", 5)
        trees.append({p.relative_to(tmp_path / name).as_posix(): p.read_bytes()
                      for p in sorted((tmp_path / name).glob("*/*.png"))})
    assert trees[0] == trees[1] and len(trees[0]) == 16


def test_train_ten_epochs_then_eval_on_train_split(tmp_path, capsys):
    from smearnet.synthetic import blob_images
    imgs, labels = blob_images(16, seed=3, size=128)
    write_corpus(tmp_path / "d", imgs, labels)
    code, out, _ = run(capsys, "train", "--arch", "thanh_net", "--data", tmp_path / "d",
                       "--epochs", 10, "--batch", 4, "--out", tmp_path / "m")
    assert code == 0
    assert len((tmp_path / "m" / "history.csv").read_text().splitlines()) == 11
    code, out, _ = run(capsys, "eval", "--model", tmp_path / "m", "--split", "train",
                       "--report", tmp_path / "r.json")
    assert code == 0 and kv(out.splitlines()[-1])["accuracy"] == "1.000000"


def test_predict_unreadable_image(trained, capsys, tmp_path):
    code, out, err = run(capsys, "predict", "--model", trained / "model", "--image",
                         tmp_path / "missing.png")
    assert code == 1 and out == ""
    (tmp_path / "junk.png").write_bytes(b"\x89PNG\r\n\x1a\n garbage")
    code, out, _ = run(capsys, "predict", "--model", trained / "model", "--image", tmp_path / "junk.png")
    assert code == 1 and out == ""

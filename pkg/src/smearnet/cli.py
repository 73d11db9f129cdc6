"""Command-line entry point: prepare, augment, train, eval, predict.

Every subcommand prints ``key=value`` lines on stdout. Exit status is 0 on
success, 1 for input or configuration errors and 2 when training diverges.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path


from . import evalkit
from .augment import AugmentPlan, generate, write_plan
from .errors import Diverged, SmearNetError
from .imageio import (
    CLASS_NAMES,
    LABELS,
    DatasetRecord,
    content_hash,
    dedup,
    load_image,
    save_image,
    scan_dataset,
    write_manifest,
)
from .models import ARCHITECTURES, DEFAULT_EPOCHS, build
from .preprocess import PreprocessConfig, condition, model_input
from .trainkit import (
    DatasetManifest,
    ImageLoader,
    TrainConfig,
    fit,
    load_checkpoint,
    predict,
    save_checkpoint,
    split_dataset,
)

DATASET_MANIFEST = "dataset-manifest.json"


class UsageError(SmearNetError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for divergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(**pairs):
    print(" ".join(f"{k}={v}" for k, v in pairs.items()), flush=True)


def _record_config(args, out_dir=None, stream=None):
    cfg = {k: (str(v) if isinstance(v, Path) else v)
           for k, v in sorted(vars(args).items()) if k != "func"}
    print("config=" + json.dumps(cfg, sort_keys=True), file=stream or sys.stdout, flush=True)
    if out_dir is not None:
        Path(out_dir, "run-config.json").write_text(
            json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return cfg


def _limit_threads(n):
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=max(1, n))


def _unique_name(rec: DatasetRecord, taken: set) -> str:
    cls = CLASS_NAMES[rec.label]
    stem = Path(rec.path).stem
    name = f"{cls}/{stem}.png"
    if name in taken:
        name = f"{cls}/{Path(rec.path).name.replace('.', '_')}.png"
    taken.add(name)
    return name


def cmd_prepare(args):
    src, out = Path(args.input), Path(args.out)
    if not src.is_dir():
        raise UsageError(f"input directory does not exist: {src}")
    if src.resolve() == out.resolve():
        raise UsageError("--out must differ from --in")
    cfg = PreprocessConfig(target_size=args.size, apply_median=not args.no_median,
                           apply_sharpen=not args.no_sharpen,
                           model_input_size=min(args.size, 128))
    records = scan_dataset(src)
    kept, removed = dedup(records)
    for name in CLASS_NAMES:
        (out / name).mkdir(parents=True, exist_ok=True)
    _record_config(args, out)

    taken, written = set(), []
    for rec in kept:
        img = condition(load_image(src / rec.path), cfg)
        rel = _unique_name(rec, taken)
        save_image(img, out / rel)
        written.append(DatasetRecord(rel, rec.label, content_hash=content_hash(img)))
    write_manifest(written, out / "manifest.json")
    write_manifest(removed, out / "removed.json")
    _emit(kept=len(kept), removed=len(removed))
    return 0


def _parse_targets(text):
    if text is None:
        return None
    if "=" not in text:
        n = int(text)
        return {0: n, 1: n}
    targets = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        if name.strip() not in LABELS:
            raise UsageError(f"unknown class {name!r} in --target-per-class")
        targets[LABELS[name.strip()]] = int(value)
    return targets


def cmd_augment(args):
    src, out = Path(args.input), Path(args.out)
    if not src.is_dir():
        raise UsageError(f"input directory does not exist: {src}")
    try:
        plan = AugmentPlan(seed=args.seed, per_image=args.per_image,
                           targets=_parse_targets(args.target_per_class),
                           shift_range=args.shift, zoom_range=(args.zoom_min, args.zoom_max),
                           shear_range=args.shear)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    sources = scan_dataset(src)
    out.mkdir(parents=True, exist_ok=True)
    _record_config(args, out)
    try:
        records = generate(plan, sources, src, out)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    counts = {name: sum(r.label == lab for r in records) for name, lab in LABELS.items()}
    write_plan(plan, counts, out / "augment-plan.json")
    write_manifest(records, out / "manifest.json")
    _emit(cancer=counts["cancer"], normal=counts["normal"], total=len(records))
    return 0


def _parse_ratios(text):
    try:
        ratios = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --ratios {text!r}") from exc
    return ratios


def cmd_train(args):
    data = Path(args.data)
    if not data.is_dir():
        raise UsageError(f"data directory does not exist: {data}")
    epochs = args.epochs if args.epochs is not None else DEFAULT_EPOCHS[args.arch]
    try:
        config = TrainConfig(arch=args.arch, epochs=epochs, batch_size=args.batch,
                             learning_rate=args.lr, optimizer=args.optimizer, seed=args.seed,
                             precision=args.precision, threads=args.threads)
        manifest = split_dataset(scan_dataset(data), _parse_ratios(args.ratios), args.seed,
                                 stratify=not args.no_stratify, root=data)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _record_config(args, out)
    n = manifest.counts()
    _emit(split=f"{n['train']}/{n['val']}/{n['test']}")
    manifest.save(out / DATASET_MANIFEST)

    model = build(args.arch, seed=args.seed, dtype=config.dtype)

    def on_epoch(m, history):
        r = history[-1]
        _emit(epoch=r.epoch, train_loss=f"{r.train_loss:.6f}", train_acc=f"{r.train_accuracy:.6f}",
              val_loss=f"{r.val_loss:.6f}", val_acc=f"{r.val_accuracy:.6f}")
        if args.save_every_epoch:
            save_checkpoint(m, history, out / f"epoch-{r.epoch:03d}")

    model, history = fit(config, manifest, model, on_epoch=on_epoch)
    save_checkpoint(model, history, out, extra={"train_config": config.to_json()})
    _emit(train_acc=f"{history[-1].train_accuracy:.6f}", val_acc=f"{history[-1].val_accuracy:.6f}")
    return 0


def cmd_eval(args):
    ckpt = Path(args.model)
    model, _, _ = load_checkpoint(ckpt)
    manifest_path = ckpt / DATASET_MANIFEST
    if not manifest_path.is_file():
        raise UsageError(f"{ckpt} has no {DATASET_MANIFEST}; train with this tool first")
    manifest = DatasetManifest.load(manifest_path)
    root = Path(args.data) if args.data else Path(manifest.root)
    records = manifest.split(args.split)
    if not records:
        raise UsageError(f"split {args.split!r} is empty")
    report_path = Path(args.report)
    _record_config(args, report_path.parent if report_path.parent.is_dir() else None)

    loader = ImageLoader(str(root), model.input_shape[-1])
    out = predict(model, records, loader, args.batch)
    labels = [r.label for r in records]
    matrix = evalkit.confusion(labels, model.decide(out, args.threshold))
    rep = evalkit.report(matrix)
    evalkit.export_report(rep, report_path)
    print(evalkit.format_matrix(matrix))
    print(evalkit.format_table(rep))
    _emit(split=args.split, n=matrix.total, accuracy=f"{rep.accuracy:.6f}")
    return 0


def cmd_predict(args):
    start = time.perf_counter()
    # the single result line is the whole stdout contract here
    _record_config(args, None, stream=sys.stderr)
    model, _, _ = load_checkpoint(args.model)
    cfg = PreprocessConfig(target_size=args.size, apply_median=not args.no_median,
                           apply_sharpen=not args.no_sharpen,
                           model_input_size=min(args.size, model.input_shape[-1]))
    img = condition(load_image(args.image), cfg)
    out = model.forward(model_input(img, model.input_shape[-1], model.dtype))
    p = float(model.cancer_probability(out)[0])
    label = int(model.decide(out, args.threshold)[0])
    ms = (time.perf_counter() - start) * 1000.0
    _emit(label=CLASS_NAMES[label], p=f"{p:.6f}", ms=f"{ms:.1f}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision", choices=("single", "double"), default="single")
    common.add_argument("--threads", type=int, default=1)

    parser = _Parser(prog="smearnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", parents=[common],
                       help="dedup, resize and filter a cancer/normal image tree")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--no-median", action="store_true")
    p.add_argument("--no-sharpen", action="store_true")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("augment", parents=[common], help="expand a prepared corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target-per-class",
                   help="total images per class: N, or cancer=N,normal=M")
    p.add_argument("--per-image", type=int, default=0,
                   help="variants per source when no targets are given")
    p.add_argument("--shift", type=float, default=0.1)
    p.add_argument("--zoom-min", type=float, default=0.9)
    p.add_argument("--zoom-max", type=float, default=1.1)
    p.add_argument("--shear", type=float, default=0.2)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", parents=[common], help="split a corpus and train a network")
    p.add_argument("--arch", required=True, choices=sorted(ARCHITECTURES))
    p.add_argument("--data", required=True)
    p.add_argument("--ratios", default="0.6,0.2,0.2")
    p.add_argument("--epochs", type=int, default=None,
                   help="defaults: basic_cnn 17, alexnet_sigmoid 12, thanh_net 10")
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--save-every-epoch", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="score a checkpoint on one split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None, help="dataset root; defaults to the training root")
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--report", default="report.json")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--batch", type=int, default=128)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", parents=[common], help="classify one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--no-median", action="store_true")
    p.add_argument("--no-sharpen", action="store_true")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help and usage errors
        return exc.code if isinstance(exc.code, int) else 1
    try:
        with _limit_threads(args.threads):
            return args.func(args)
    except Diverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SmearNetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line workbench: dataset generation, training, evaluation and the
canned experiment protocols. Every command exits 0 on success and prints a
single `error: ...` line with a nonzero status otherwise."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import datasets, experiments, sard
from .cnn.training import TrainConfig, evaluate, train

__all__ = ["main", "build_parser"]


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lr", type=float, default=1e-3, help="learning rate")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=30, help="training epochs")
    parser.add_argument("--val-every", type=int, default=1)
    parser.add_argument("--filters", type=int, default=1, help="convolution filters")
    parser.add_argument("--filter-size", type=int, default=13)
    parser.add_argument(
        "--no-normalize",
        action="store_true",
        help="skip per-sample min-max input normalization",
    )


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        seed=args.seed,
        val_every=args.val_every,
        n_filters=args.filters,
        filter_size=args.filter_size,
        normalize_inputs=not args.no_normalize,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarbench",
        description="Circular-track SAR simulation, backprojection imaging and"
        " CNN classification experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-dataset", help="generate a simulated dataset file")
    gen.add_argument(
        "--task",
        required=True,
        choices=("shape", "multiscatterer", "radius", "count"),
    )
    gen.add_argument("--out", required=True, help="output .sard path")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-per-class", type=int, default=None)
    gen.add_argument("--n-total", type=int, default=6000, help="count task only")
    gen.add_argument("--height", type=float, default=None, help="antenna height")
    gen.add_argument("--mode", choices=("raw", "backprojected"), default="raw")
    gen.add_argument("--radius", type=float, default=2.0, help="bump radius")
    gen.add_argument(
        "--paper-times",
        action="store_true",
        help="use the fixed fast-time window [5, 23] instead of the"
        " geometry-derived window",
    )

    tr = sub.add_parser("train", help="train a classifier on a dataset file")
    tr.add_argument("--data", required=True)
    tr.add_argument("--out", required=True, help="output checkpoint path")
    tr.add_argument("--report", default=None, help="report path (default <out>.report.txt)")
    tr.add_argument("--seed", type=int, default=0)
    _add_train_flags(tr)

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--split", default="test", choices=("train", "val", "test"))
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--report", default=None, help="write the confusion matrix CSV here")

    sc = sub.add_parser("shape-comparison", help="raw versus backprojected accuracy per height")
    sc.add_argument("--heights", default="0,5,10", help="comma-separated antenna heights")
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--paper-scale", action="store_true", help="full sample counts and epochs")
    sc.add_argument("--paper-times", action="store_true")
    sc.add_argument("--out-dir", default=None)

    ms = sub.add_parser("multiscatterer-sweep", help="one-vs-two bump accuracy per radius")
    ms.add_argument("--radii", default="1,2,3,4,5,10,15")
    ms.add_argument("--seed", type=int, default=0)
    ms.add_argument("--paper-scale", action="store_true")
    ms.add_argument("--out-dir", default=None)

    rc = sub.add_parser("radius-count", help="radius and bump-count classification at h=0")
    rc.add_argument("--seed", type=int, default=0)
    rc.add_argument("--paper-scale", action="store_true")
    rc.add_argument("--out-dir", default=None)

    ice = sub.add_parser("ice", help="8-class ice-type classification")
    ice.add_argument("--root", required=True, help="directory with class subdirectories 1..8")
    ice.add_argument("--seed", type=int, default=0)
    ice.add_argument("--n-per-class", type=int, default=1170)
    ice.add_argument("--epochs", type=int, default=100)
    ice.add_argument("--out-dir", default=None)

    return parser


def _print_class_counts(dataset: datasets.LabeledDataset) -> None:
    labels = np.array([s.label for s in dataset.samples])
    for label in range(1, dataset.class_count + 1):
        print(f"class {label}: {int((labels == label).sum())} samples")
    tr, va, te = dataset.split_sizes()
    print(f"split train/val/test: {tr}/{va}/{te}")


def _cmd_gen_dataset(args) -> int:
    if args.task == "shape":
        n = args.n_per_class if args.n_per_class is not None else 1000
        height = args.height if args.height is not None else 5.0
        dataset = datasets.gen_shape_dataset(
            n_per_class=n,
            height=height,
            mode=args.mode,
            seed=args.seed,
            paper_times=args.paper_times,
        )
    elif args.task == "multiscatterer":
        n = args.n_per_class if args.n_per_class is not None else 2500
        dataset = datasets.gen_multiscatterer_dataset(
            args.radius, n_per_class=n, seed=args.seed, paper_times=args.paper_times
        )
    elif args.task == "radius":
        n = args.n_per_class if args.n_per_class is not None else 1250
        height = args.height if args.height is not None else 0.0
        dataset = datasets.gen_radius_dataset(
            n_per_class=n, seed=args.seed, height=height, paper_times=args.paper_times
        )
    else:
        height = args.height if args.height is not None else 0.0
        dataset = datasets.gen_count_dataset(
            n_total=args.n_total,
            seed=args.seed,
            height=height,
            r=args.radius,
            paper_times=args.paper_times,
        )
    sard.write_dataset(args.out, dataset, task=args.task)
    _print_class_counts(dataset)
    print(f"wrote {args.out}")
    return 0


def _metrics_csv(metrics) -> str:
    lines = ["epoch,train_loss,train_accuracy,val_accuracy"]
    for m in metrics:
        val = "" if m.val_accuracy is None else f"{m.val_accuracy:.6f}"
        lines.append(f"{m.epoch},{m.train_loss:.6f},{m.train_accuracy:.6f},{val}")
    return "\n".join(lines) + "\n"


def _cmd_train(args) -> int:
    dataset = sard.read_dataset(args.data)
    config = _train_config(args)
    start = time.perf_counter()
    result = train(dataset, config)
    confusion = evaluate(result.params, dataset, split="test", seed=args.seed)
    wall = time.perf_counter() - start
    sard.write_checkpoint(args.out, result.params)
    report_path = args.report or f"{args.out}.report.txt"
    report = experiments.ExperimentReport(
        experiment="train",
        seed=args.seed,
        config=experiments._config_echo(config, data=str(args.data)),
        metrics=result.metrics,
        confusion=confusion,
        wall_clock=wall,
    )
    Path(report_path).write_text(report.to_text())
    print(_metrics_csv(result.metrics), end="")
    print(f"test accuracy: {100 * confusion.accuracy:.2f}")
    print(f"wrote {args.out} and {report_path}")
    return 0


def _cmd_eval(args) -> int:
    params = sard.read_checkpoint(args.model)
    dataset = sard.read_dataset(args.data)
    if params.n_classes != dataset.class_count:
        raise ValueError(
            f"checkpoint has {params.n_classes} classes but dataset has"
            f" {dataset.class_count}"
        )
    confusion = evaluate(params, dataset, split=args.split, seed=args.seed)
    print(confusion.to_csv(), end="")
    print(f"accuracy: {100 * confusion.accuracy:.2f}")
    if args.report:
        Path(args.report).write_text(confusion.to_csv())
        print(f"wrote {args.report}")
    return 0


def _write_reports(out_dir: str | None, reports: dict) -> None:
    if out_dir is None:
        return
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    for name, report in reports.items():
        (directory / f"{name}.report.txt").write_text(report.to_text())
        (directory / f"{name}.confusion.csv").write_text(report.confusion.to_csv())


def _cmd_shape_comparison(args) -> int:
    heights = tuple(float(h) for h in args.heights.split(","))
    result = experiments.run_shape_comparison(
        heights=heights,
        seed=args.seed,
        paper_scale=args.paper_scale,
        paper_times=args.paper_times,
    )
    print(result.table(), end="")
    _write_reports(args.out_dir, result.reports)
    return 0


def _cmd_multiscatterer(args) -> int:
    radii = tuple(float(r) for r in args.radii.split(","))
    result = experiments.run_multiscatterer_sweep(
        radii=radii, seed=args.seed, paper_scale=args.paper_scale
    )
    print(result.table(), end="")
    if result.band is not None:
        print(f"perfect-accuracy radius band: [{result.band[0]:g}, {result.band[1]:g}]")
    else:
        print("perfect-accuracy radius band: none")
    _write_reports(args.out_dir, result.reports)
    return 0


def _cmd_radius_count(args) -> int:
    radius_report, count_report = experiments.run_radius_and_count(
        seed=args.seed, paper_scale=args.paper_scale
    )
    for report in (radius_report, count_report):
        print(f"{report.experiment} accuracy: {100 * report.accuracy:.2f}")
    _write_reports(
        args.out_dir, {radius_report.experiment: radius_report, count_report.experiment: count_report}
    )
    return 0


def _cmd_ice(args) -> int:
    report = experiments.run_ice(
        args.root, seed=args.seed, n_per_class=args.n_per_class, epochs=args.epochs
    )
    print(f"train accuracy: {report.extras['final_train_accuracy']}")
    print(f"test accuracy: {100 * report.accuracy:.2f}")
    _write_reports(args.out_dir, {report.experiment: report})
    return 0


_HANDLERS = {
    "gen-dataset": _cmd_gen_dataset,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "shape-comparison": _cmd_shape_comparison,
    "multiscatterer-sweep": _cmd_multiscatterer,
    "radius-count": _cmd_radius_count,
    "ice": _cmd_ice,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except Exception as exc:  # surface one parseable line, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

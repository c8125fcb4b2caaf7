"""Batch experiment runner.

    ddr simulate  --config cfg.txt [--seed N] [--out DIR]
    ddr train     --config cfg.txt [--seed N] [--out DIR]
    ddr benchmark --config cfg.txt [--seed N] [--out DIR]

Exit codes: 0 success, 2 usage/config error, 3 numeric failure.  The
reference implementation executes folds serially and deterministically;
the DDR_THREADS environment variable caps concurrency (serial execution
trivially satisfies any cap).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import nn
from .datagen import save_csv
from .errors import DdrError, NumericError, ParseError
from .experiments import (
    load_experiment_config,
    make_dataset,
    make_train_config,
    run_benchmark,
)
from .trainer import ddr_train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _load(args) -> "ExperimentConfig":
    config = load_experiment_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.output_dir = args.out
    os.makedirs(config.output_dir, exist_ok=True)
    return config


def cmd_simulate(args) -> int:
    config = _load(args)
    dataset = make_dataset(config.dataset, config.seed)
    path = os.path.join(config.output_dir, f"{config.task}.csv")
    save_csv(dataset, path)
    print(f"wrote {path} ({dataset.n} rows, "
          f"{dataset.x.shape[1] + dataset.y.shape[1]} columns)")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load(args)
    dataset = make_dataset(config.dataset, config.seed)
    from .datagen import standardize

    train_std, _ = standardize(dataset)
    cfg = make_train_config(dict(config.overrides.get("ddr", {})), config.seed)
    model = ddr_train(train_std, cfg)
    ckpt = os.path.join(config.output_dir, f"{config.task}_representer.json")
    nn.save_checkpoint(model.representer, ckpt)
    nn.save_checkpoint(
        model.discriminator,
        os.path.join(config.output_dir, f"{config.task}_discriminator.json"),
    )
    log_path = os.path.join(config.output_dir, f"{config.task}_training_log.csv")
    tmp = f"{log_path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,dcov_term,match_term,disc_loss\n")
        for r in model.training_log:
            fh.write(f"{r.epoch},{r.dcov_term!r},{r.match_term!r},{r.disc_loss!r}\n")
    os.replace(tmp, log_path)
    print(f"wrote {ckpt} and {log_path} ({len(model.training_log)} epochs)")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    config = _load(args)
    report = run_benchmark(config)
    folds_path = os.path.join(config.output_dir, f"{config.task}_folds.csv")
    summary_path = os.path.join(config.output_dir, f"{config.task}_summary.csv")
    report.write_csv(folds_path, summary_path)
    echo_path = os.path.join(config.output_dir, f"{config.task}_config.json")
    tmp = f"{echo_path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(
            {"hash": report.config_hash, "config": report.resolved_config},
            fh,
            indent=2,
            default=str,
        )
    os.replace(tmp, echo_path)
    for entry in report.summary():
        metric = "accuracy" if report.task_is_classification() else "rmse"
        mean = entry.get(f"{metric}_mean")
        se = entry.get(f"{metric}_se")
        shown = f"{mean:.4f} +/- {se:.4f}" if mean is not None else "failed"
        print(f"{entry['method']:>8}  {metric} {shown}")
    failed = [r for r in report.rows if r["status"] != "ok"]
    if failed:
        print(f"{len(failed)} fold run(s) failed; see {folds_path}", file=sys.stderr)
    print(f"wrote {folds_path}, {summary_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddr",
        description="Deep dimension reduction experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("simulate", cmd_simulate),
        ("train", cmd_train),
        ("benchmark", cmd_benchmark),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key-value config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DdrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

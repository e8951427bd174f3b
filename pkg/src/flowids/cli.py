"""Command-line surface.

Subcommands: ingest, svd, select, train, evaluate, run. Exit codes:
0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, NumericError, PipelineError
from .featsel import write_chi2_csv, write_ranking_csv
from .ingest import apply_normalizer, fit_normalizer
from .linalg import RsvdConfig, dump_factors, randomized_svd
from .metrics import evaluate as evaluate_metrics
from .pipeline import (
    ExperimentConfig,
    derive_seed,
    emit_report,
    fit_fold_artifacts,
    fit_full_bundle,
    load_bundle,
    load_config,
    load_dataset,
    run_experiment,
    save_bundle,
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config JSON")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--sample-rows", type=int, default=None,
                        help="stratified, seeded subsample of the dataset")
    common.add_argument("--threads", type=int, default=1,
                        help="fold-level worker threads")

    parser = argparse.ArgumentParser(
        prog="flowids",
        description="Malicious-flow detection experiments on intrusion datasets",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common],
                   help="validate and summarize a dataset")
    sub.add_parser("svd", parents=[common],
                   help="factor the dataset and dump U, S, V as CSV")
    sub.add_parser("select", parents=[common],
                   help="emit feature-selection ranking CSVs")
    sub.add_parser("train", parents=[common],
                   help="train a classifier on the full dataset")
    eval_p = sub.add_parser("evaluate", parents=[common],
                            help="evaluate a saved model on a dataset")
    eval_p.add_argument("--model", required=True, help="path to model.mgnn")
    sub.add_parser("run", parents=[common], help="run the full experiment")
    return parser


def _effective_config(args) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        config = replace(config, seed=args.seed)
    if args.sample_rows is not None:
        if args.sample_rows < 1:
            raise ConfigError("--sample-rows must be >= 1")
        config = replace(config, sample_rows=args.sample_rows)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return config


def _cmd_ingest(args) -> int:
    config = _effective_config(args)
    table, summary = load_dataset(config)
    for key, value in summary.items():
        print(f"{key}: {value}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ingest_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {out / 'ingest_summary.json'}")
    return 0


def _cmd_svd(args) -> int:
    config = _effective_config(args)
    table, _ = load_dataset(config)
    stats = fit_normalizer(table, np.arange(table.n_rows))
    normalized = apply_normalizer(table, stats)
    rank, over = config.svd_rank, config.svd_oversampling
    if rank + over > min(normalized.n_rows, normalized.n_cols):
        raise DataError(
            f"svd rank+oversampling {rank + over} exceeds dataset "
            f"dimensions {normalized.n_rows}x{normalized.n_cols}"
        )
    factors = randomized_svd(
        normalized.features,
        RsvdConfig(k=rank, p=over, q=config.svd_power, seed=config.seed),
    )
    paths = dump_factors(factors, args.out)
    print(f"rank {factors.k} factors; leading singular values: "
          + ", ".join(f"{s:.6g}" for s in factors.s[: min(5, factors.k)]))
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_select(args) -> int:
    config = _effective_config(args)
    if config.selection_method == "none":
        print("selection method is 'none'; nothing to rank")
        return 0
    table, _ = load_dataset(config)
    artifacts = fit_fold_artifacts(table, np.arange(table.n_rows), config, 0, 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if artifacts.chi2_report is not None:
        path = out / "chi2_scores.csv"
        write_chi2_csv(artifacts.chi2_report, artifacts.selection_input_names, path)
        print(f"wrote {path}")
    if artifacts.ablation_ranking is not None:
        path = out / "ablation_ranking.csv"
        write_ranking_csv(
            artifacts.ablation_ranking, artifacts.ablation_input_names, path
        )
        print(f"wrote {path}")
    print(f"selected features: {list(artifacts.selected_features)}")
    return 0


def _cmd_train(args) -> int:
    config = _effective_config(args)
    table, _ = load_dataset(config)
    bundle, _artifacts, history = fit_full_bundle(config, table)
    model_path, meta_path = save_bundle(bundle, args.out)
    hist_path = Path(args.out) / "history.csv"
    with open(hist_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss,accuracy\n")
        for row in history:
            fh.write(f"{row['epoch']},{row['loss']!r},{row['accuracy']!r}\n")
    final = history[-1]
    print(f"final training loss {final['loss']:.6f}, "
          f"accuracy {final['accuracy']:.4f}")
    for p in (model_path, meta_path, str(hist_path)):
        print(f"wrote {p}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _effective_config(args)
    bundle = load_bundle(args.model)
    table, _ = load_dataset(config)
    probs = bundle.predict(table.features)
    report = evaluate_metrics(table.labels, probs, bundle.threshold)
    doc = report.to_json_dict()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "evaluation.json").write_text(
        json.dumps(doc, indent=2) + "\n", encoding="utf-8"
    )
    for name in ("accuracy", "precision", "recall", "f_measure", "fpr", "frr"):
        value = doc[name]
        print(f"{name}: {'undefined' if value is None else f'{value:.6f}'}")
    print(f"wrote {out / 'evaluation.json'}")
    return 0


def _cmd_run(args) -> int:
    config = _effective_config(args)
    doc = run_experiment(config, threads=args.threads)
    paths = emit_report(doc, args.out)
    mean_acc = doc.overall.mean["accuracy"]
    acc_text = "undefined" if mean_acc is None else f"{mean_acc:.6f}"
    print(f"overall accuracy: {acc_text} "
          f"({config.repetitions} repetitions x {config.k_folds} folds)")
    for row in doc.baselines:
        delta = row["delta"]
        delta_text = "" if delta is None else f" (delta {delta:+.6f})"
        acc = row["accuracy"]
        acc_str = "undefined" if acc is None else f"{acc:.6f}"
        print(f"  {row['name']}: {acc_str}{delta_text}")
    for p in paths:
        print(f"wrote {p}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "svd": _cmd_svd,
    "select": _cmd_select,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "run": _cmd_run,
}


def _exit_code_for(exc: Exception) -> int:
    if isinstance(exc, PipelineError):
        return _exit_code_for(exc.cause)
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, DataError):
        return 3
    if isinstance(exc, NumericError):
        return 4
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DataError, NumericError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Verbs: ingest, stats, export-requests, run, grid, grid-utterance, gradcheck,
search. Exit codes: 0 success, 2 config error, 3 data error, 4 missing
precomputed vectors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import mlp
from .corpus import assemble_dataset, corpus_stats, load_gold_standard, load_table_dir
from .errors import ConfigError, DataError, MissingVectorsError
from .experiments import (
    RunConfig,
    UTTERANCE_MODES,
    UtteranceSpec,
    export_bridge_requests,
    hyperparameter_search,
    run_grid,
    run_utterance_grid,
)
from .tables import LabeledDataset

log = logging.getLogger("tabcls")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_MISSING_VECTORS = 4


def load_dataset(dataset_dir: str, min_class_count: int) -> LabeledDataset:
    """Load the canonical layout: <dir>/tables/*.{json,csv} + <dir>/gold.csv."""
    root = Path(dataset_dir)
    tables = load_table_dir(root / "tables")
    gold = load_gold_standard(root / "gold.csv")
    return assemble_dataset(tables, gold, min_class_count)


def _parse_q(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad q list {text!r}") from exc
    if not values:
        raise ConfigError("empty q list")
    return values


def _parse_masked(text: str) -> list[bool]:
    if text == "on":
        return [True]
    if text == "off":
        return [False]
    if text == "both":
        return [False, True]
    raise ConfigError(f"--masked must be on, off or both, got {text!r}")


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        dataset_dir=args.dataset,
        encoder_id=args.encoder,
        q_values=_parse_q(args.q),
        masked_modes=_parse_masked(args.masked),
        utterance=UtteranceSpec(args.utterance, args.constant_text),
        k_folds=args.k_folds,
        seed=args.seed,
        out_dir=args.out,
        workers=args.workers,
        vocab_limit=args.vocab_limit,
        min_class_count=args.min_class_count,
        fold_scoring=args.fold_scoring,
        transductive_fit=args.transductive_tfidf,
        hidden_size=args.hidden_size,
        train=mlp.TrainConfig(seed=args.seed, max_epochs=args.max_epochs),
    )


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="dataset directory (tables/ + gold.csv)")
    parser.add_argument("--min-class-count", type=int, default=2,
                        help="keep classes with at least this many tables (default 2)")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    _add_dataset_args(parser)
    parser.add_argument("--encoder", required=True,
                        help="tfidf | wordvec:<lexicon.vec> | pooled-rows:<store.jsonl> | pooled-cols:<store.jsonl>")
    parser.add_argument("--q", default="1,3,5,7", help="comma-separated q values (default 1,3,5,7)")
    parser.add_argument("--masked", default="both", choices=["on", "off", "both"])
    parser.add_argument("--utterance", default="empty", choices=list(UTTERANCE_MODES))
    parser.add_argument("--constant-text", default="Thing")
    parser.add_argument("--k-folds", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--vocab-limit", type=int, default=None)
    parser.add_argument("--fold-scoring", default="present", choices=["present", "full"])
    parser.add_argument("--transductive-tfidf", action="store_true",
                        help="fit TF-IDF on the whole corpus instead of training folds")
    parser.add_argument("--hidden-size", type=int, default=500)
    parser.add_argument("--max-epochs", type=int, default=200)


def cmd_ingest(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset, args.min_class_count)
    stats = corpus_stats(dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "dataset_dir": args.dataset,
        "min_class_count": args.min_class_count,
        "table_count": stats.table_count,
        "class_count": stats.class_count,
        "classes": dataset.classes,
        "class_histogram": stats.class_histogram,
    }
    (out / "ingest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    print(f"ingested {stats.table_count} tables across {stats.class_count} classes")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset, args.min_class_count)
    stats = corpus_stats(dataset)
    print(f"tables:       {stats.table_count}")
    print(f"classes:      {stats.class_count}")
    print(f"mean rows:    {stats.mean_rows:.1f}")
    print(f"mean columns: {stats.mean_cols:.1f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "table_count": stats.table_count,
            "class_count": stats.class_count,
            "mean_rows": stats.mean_rows,
            "mean_cols": stats.mean_cols,
            "class_histogram": stats.class_histogram,
        }
        (out / "stats.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    return EXIT_OK


def cmd_export_requests(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset, args.min_class_count)
    specs = [UtteranceSpec(mode, args.constant_text) for mode in args.utterances.split(",")]
    targets = args.targets.split(",")
    count = export_bridge_requests(
        dataset, args.out_file, _parse_q(args.q), _parse_masked(args.masked),
        specs, targets, seed=args.seed,
    )
    print(f"wrote {count} encoding requests to {args.out_file}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = _run_config(args)
    if len(config.q_values) != 1 or len(config.masked_modes) != 1:
        raise ConfigError("run expects exactly one q and --masked on/off; use grid for sweeps")
    dataset = load_dataset(args.dataset, args.min_class_count)
    reports = run_grid(config, dataset)
    report = next(iter(reports.values()))
    print(f"macro-F1 {report.mean_macro_f1:.4f} (pooled {report.pooled_macro_f1:.4f})")
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = load_dataset(args.dataset, args.min_class_count)
    reports = run_grid(config, dataset)
    for (q, masked), report in sorted(reports.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        label = "masked " if masked else "visible"
        print(f"q={q} {label}: macro-F1 {report.mean_macro_f1:.4f}")
    print(f"summary written to {Path(config.out_dir) / 'summary.csv'}")
    return EXIT_OK


def cmd_grid_utterance(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = load_dataset(args.dataset, args.min_class_count)
    modes = args.modes.split(",")
    q_values = _parse_q(args.q)
    if len(q_values) != 1:
        raise ConfigError("grid-utterance runs at a single q (default 3)")
    reports = run_utterance_grid(config, dataset, modes, q=q_values[0])
    for (mode, masked), report in sorted(reports.items()):
        label = "masked " if masked else "visible"
        print(f"utterance={mode:<14} {label}: macro-F1 {report.mean_macro_f1:.4f}")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    d, k, n = args.dim, args.classes, args.batch
    params = mlp.init_params(d, k, hidden_size=args.hidden_size, seed=args.seed)
    X = rng.normal(size=(n, d))
    y = rng.integers(0, k, size=n)
    err = mlp.gradient_check(params, X, y, h=args.h, n_checks=args.checks, seed=args.seed)
    print(f"max relative gradient error: {err:.3e} (threshold {args.threshold:.1e})")
    return EXIT_OK if err < args.threshold else 1


def cmd_search(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = load_dataset(args.dataset, args.min_class_count)
    hidden_sizes = [int(v) for v in args.hidden_sizes.split(",")]
    learning_rates = [float(v) for v in args.learning_rates.split(",")]
    q_values = _parse_q(args.q)
    masked_modes = _parse_masked(args.masked)
    if len(q_values) != 1 or len(masked_modes) != 1:
        raise ConfigError("search runs at a single (q, masked) cell")
    results = hyperparameter_search(
        config, dataset, hidden_sizes, learning_rates,
        q=q_values[0], masked=masked_modes[0],
    )
    best = max(results, key=lambda row: row["macro_f1"])
    print(f"best: hidden={best['hidden_size']} lr={best['learning_rate']:g} "
          f"macro-F1 {best['macro_f1']:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tabcls",
                                     description="Table-to-class annotation benchmark")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a dataset and write the ingest manifest")
    _add_dataset_args(p)
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="print corpus statistics")
    _add_dataset_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export-requests", help="write bridge encoding requests (JSONL)")
    _add_dataset_args(p)
    p.add_argument("--out-file", required=True)
    p.add_argument("--q", default="1,3,5,7")
    p.add_argument("--masked", default="both", choices=["on", "off", "both"])
    p.add_argument("--utterances", default="empty",
                   help="comma-separated utterance modes (default empty)")
    p.add_argument("--constant-text", default="Thing")
    p.add_argument("--targets", default="rowwise,columnwise")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_export_requests)

    p = sub.add_parser("run", help="evaluate one (encoder, q, masked) cell")
    _add_run_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="full encoder grid over q and masking")
    _add_run_args(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("grid-utterance", help="utterance ablation for pooled encoders")
    _add_run_args(p)
    p.add_argument("--modes", default="empty,random10,constant,correct-class,wrong-class")
    p.set_defaults(func=cmd_grid_utterance, q="3")

    p = sub.add_parser("gradcheck", help="finite-difference check of the MLP gradients")
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--hidden-size", type=int, default=32)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--checks", type=int, default=128)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("search", help="hyperparameter grid (hidden sizes x learning rates)")
    _add_run_args(p)
    p.add_argument("--hidden-sizes", default="100,500,1000")
    p.add_argument("--learning-rates", default="0.0001,0.001,0.01")
    p.set_defaults(func=cmd_search, q="3", masked="off")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingVectorsError as exc:
        print(f"missing precomputed vectors: {exc}", file=sys.stderr)
        return EXIT_MISSING_VECTORS
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()

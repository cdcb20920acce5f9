"""Experiment orchestration: declarative grids over encoder x q x masking,
utterance ablations, bridge request export, and summary emission.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import load_precomputed, load_vec_file
from .encoders import PooledEncoder, TfidfEncoder, WordVecEncoder
from .errors import ConfigError
from .evaluation import EvalReport, run_cv
from .mlp import TrainConfig
from .preprocess import mask_columns, sample_rows, shuffle_dataset, table_sequence
from .tables import LabeledDataset

log = logging.getLogger(__name__)

UTTERANCE_MODES = ("empty", "random10", "constant", "correct-class", "wrong-class")


@dataclass
class UtteranceSpec:
    """How to assign the natural-language utterance a table LM expects."""

    mode: str = "empty"
    constant_text: str = "Thing"

    def __post_init__(self) -> None:
        if self.mode not in UTTERANCE_MODES:
            raise ConfigError(
                f"unknown utterance mode {self.mode!r}, expected one of {UTTERANCE_MODES}"
            )


def make_utterances(
    dataset: LabeledDataset, spec: UtteranceSpec, seed: int = 0
) -> dict[str, str]:
    """Assign one utterance string per table id.

    empty -> a single space; random10 -> seeded unique 10-character strings;
    constant -> the constant text; correct-class -> the table's label;
    wrong-class -> the label under a seeded cyclic shift of the class
    inventory (fixed-point-free by construction).
    """
    entries = sorted(dataset.entries, key=lambda entry: entry[0].id)
    if spec.mode == "empty":
        return {table.id: " " for table, _ in entries}
    if spec.mode == "constant":
        return {table.id: spec.constant_text for table, _ in entries}
    if spec.mode == "correct-class":
        return {table.id: label for table, label in entries}
    if spec.mode == "wrong-class":
        k = dataset.k
        if k < 2:
            raise ConfigError("wrong-class utterances need at least two classes")
        shift = 1 + int(np.random.default_rng(seed).integers(k - 1))
        ordered = sorted(dataset.classes)
        wrong = {name: ordered[(i + shift) % k] for i, name in enumerate(ordered)}
        return {table.id: wrong[label] for table, label in entries}
    # random10
    rng = np.random.default_rng(seed)
    alphabet = list(string.ascii_lowercase + string.digits)
    used: set[str] = set()
    out: dict[str, str] = {}
    for table, _ in entries:
        while True:
            text = "".join(rng.choice(alphabet, size=10))
            if text not in used:
                used.add(text)
                out[table.id] = text
                break
    return out


@dataclass
class RunConfig:
    """One experiment grid: encoder x q values x masking modes."""

    dataset_dir: str
    encoder_id: str
    q_values: list[int] = field(default_factory=lambda: [1, 3, 5, 7])
    masked_modes: list[bool] = field(default_factory=lambda: [False, True])
    utterance: UtteranceSpec = field(default_factory=UtteranceSpec)
    k_folds: int = 20
    seed: int = 0
    out_dir: str = "runs"
    workers: int = 1
    vocab_limit: int | None = None
    min_class_count: int = 2
    fold_scoring: str = "present"
    transductive_fit: bool = False
    hidden_size: int = 500
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if not self.q_values or any(q < 1 for q in self.q_values):
            raise ConfigError("q values must be positive")
        if not self.masked_modes:
            raise ConfigError("at least one masking mode is required")


def _corpus_vocabulary(dataset: LabeledDataset, q_values: list[int], seed: int) -> set[str]:
    """All tokens any grid cell can produce, for lexicon restriction."""
    shuffled = shuffle_dataset(dataset, seed)
    q_max = max(q_values)
    vocab: set[str] = set()
    for table in shuffled.tables:
        st = sample_rows(table, q_max)
        vocab.update(table_sequence(st).tokens)
        vocab.update(table_sequence(mask_columns(st)).tokens)
    return vocab


def build_encoder(config: RunConfig, dataset: LabeledDataset, utterances: dict[str, str] | str):
    """Instantiate the encoder named by ``encoder_id``.

    Syntax: ``tfidf`` | ``wordvec:<lexicon.vec>`` | ``pooled-rows:<store.jsonl>``
    | ``pooled-cols:<store.jsonl>``.
    """
    encoder_id = config.encoder_id
    if encoder_id == "tfidf":
        return TfidfEncoder()
    kind, _, arg = encoder_id.partition(":")
    if not arg:
        raise ConfigError(f"encoder {encoder_id!r} needs an argument, e.g. {kind}:<path>")
    if kind == "wordvec":
        restrict = _corpus_vocabulary(dataset, config.q_values, config.seed)
        lexicon = load_vec_file(arg, vocab_limit=config.vocab_limit, restrict_to=restrict)
        log.info("lexicon %s: kept %d of corpus vocabulary %d", arg, len(lexicon), len(restrict))
        return WordVecEncoder(lexicon)
    if kind == "pooled-rows":
        return PooledEncoder(load_precomputed(arg), "row", utterances)
    if kind == "pooled-cols":
        return PooledEncoder(load_precomputed(arg), "column", utterances)
    raise ConfigError(f"unknown encoder id {encoder_id!r}")


def _cell_dir(out_dir: Path, encoder_name: str, q: int, masked: bool) -> Path:
    return out_dir / encoder_name.replace(":", "_") / f"q{q}_{'masked' if masked else 'visible'}"


def write_summary(
    out_dir: Path,
    encoder_name: str,
    cells: dict[tuple[int, bool], EvalReport],
    q_values: list[int],
) -> tuple[Path, Path]:
    """Emit summary.csv (tidy) and summary.md (two panels, visible/masked)."""
    csv_path = out_dir / "summary.csv"
    with csv_path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("encoder,q,masked,macro_f1\n")
        for q in q_values:
            for masked in (False, True):
                if (q, masked) in cells:
                    score = cells[(q, masked)].mean_macro_f1
                    handle.write(f"{encoder_name},{q},{str(masked).lower()},{score:.6f}\n")

    md_path = out_dir / "summary.md"
    with md_path.open("w", encoding="utf-8", newline="\n") as handle:
        for masked, title in ((False, "Column names"), (True, "Masked column names")):
            qs = [q for q in q_values if (q, masked) in cells]
            if not qs:
                continue
            handle.write(f"## {title}\n\n")
            handle.write("| encoder | " + " | ".join(f"q={q}" for q in qs) + " |\n")
            handle.write("|---" * (len(qs) + 1) + "|\n")
            scores = " | ".join(f"{cells[(q, masked)].mean_macro_f1:.2f}" for q in qs)
            handle.write(f"| {encoder_name} | {scores} |\n\n")
    return csv_path, md_path


def _grid_cell(
    config: RunConfig,
    dataset: LabeledDataset,
    utterances: dict[str, str],
    q: int,
    masked: bool,
) -> EvalReport:
    encoder = build_encoder(config, dataset, utterances)
    return run_cv(
        dataset, encoder, q, masked, config.train,
        k_folds=config.k_folds, seed=config.seed,
        fold_scoring=config.fold_scoring,
        transductive_fit=config.transductive_fit,
        hidden_size=config.hidden_size,
        manifest_extra={
            "dataset_dir": config.dataset_dir,
            "encoder_id": config.encoder_id,
            "utterance_mode": config.utterance.mode,
            "min_class_count": config.min_class_count,
        },
    )


def run_grid(config: RunConfig, dataset: LabeledDataset) -> dict[tuple[int, bool], EvalReport]:
    """Run every (q, masked) cell of the grid, writing one report per cell
    plus the Table-1-shaped summary files.

    Cells are independent jobs; with ``workers > 1`` they run in a process
    pool. Report writing stays serialized in grid order either way, so
    outputs are byte-identical across worker counts.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    utterances = make_utterances(dataset, config.utterance, config.seed)
    cells = [(q, masked) for q in config.q_values for masked in config.masked_modes]

    reports: dict[tuple[int, bool], EvalReport] = {}
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {
                cell: pool.submit(_grid_cell, config, dataset, utterances, *cell)
                for cell in cells
            }
            reports = {cell: future.result() for cell, future in futures.items()}
    else:
        encoder = build_encoder(config, dataset, utterances)
        for q, masked in cells:
            reports[(q, masked)] = run_cv(
                dataset, encoder, q, masked, config.train,
                k_folds=config.k_folds, seed=config.seed,
                fold_scoring=config.fold_scoring,
                transductive_fit=config.transductive_fit,
                hidden_size=config.hidden_size,
                manifest_extra={
                    "dataset_dir": config.dataset_dir,
                    "encoder_id": config.encoder_id,
                    "utterance_mode": config.utterance.mode,
                    "min_class_count": config.min_class_count,
                },
            )

    encoder_name = config.encoder_id.partition(":")[0]
    for q, masked in cells:
        report = reports[(q, masked)]
        report.save(_cell_dir(out_dir, encoder_name, q, masked))
        log.info("%s q=%d masked=%s: macro-F1 %.4f", encoder_name, q, masked,
                 report.mean_macro_f1)
    write_summary(out_dir, encoder_name, reports, config.q_values)
    return reports


def run_utterance_grid(
    config: RunConfig,
    dataset: LabeledDataset,
    modes: list[str],
    q: int = 3,
) -> dict[tuple[str, bool], EvalReport]:
    """Utterance ablation for pooled encoders: modes x masked/visible at one q."""
    if not config.encoder_id.startswith("pooled-"):
        raise ConfigError("the utterance ablation applies to pooled-rows/pooled-cols encoders")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports: dict[tuple[str, bool], EvalReport] = {}
    for mode in modes:
        spec = UtteranceSpec(mode, config.utterance.constant_text)
        utterances = make_utterances(dataset, spec, config.seed)
        encoder = build_encoder(config, dataset, utterances)
        for masked in config.masked_modes:
            report = run_cv(
                dataset, encoder, q, masked, config.train,
                k_folds=config.k_folds, seed=config.seed,
                fold_scoring=config.fold_scoring,
                hidden_size=config.hidden_size,
                manifest_extra={"utterance_mode": mode, "encoder_id": config.encoder_id},
            )
            cell = out_dir / f"utterance_{mode}_{'masked' if masked else 'visible'}"
            report.save(cell)
            reports[(mode, masked)] = report
            log.info("utterance=%s masked=%s: macro-F1 %.4f", mode, masked, report.mean_macro_f1)

    with (out_dir / "utterance_summary.csv").open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("utterance,masked,macro_f1\n")
        for mode in modes:
            for masked in (False, True):
                if (mode, masked) in reports:
                    score = reports[(mode, masked)].mean_macro_f1
                    handle.write(f"{mode},{str(masked).lower()},{score:.6f}\n")
    return reports


def export_bridge_requests(
    dataset: LabeledDataset,
    out_path: str | Path,
    q_values: list[int],
    masked_modes: list[bool],
    utterance_specs: list[UtteranceSpec],
    targets: list[str],
    seed: int = 0,
) -> int:
    """Write the JSONL encoding jobs the LM bridge consumes.

    One line per table x q x masked x utterance spec x target, carrying the
    sampled (masked where requested) rows and the header. Deterministic for
    fixed inputs.
    """
    for target in targets:
        if target not in ("rowwise", "columnwise"):
            raise ConfigError(f"unknown bridge target {target!r}")
    shuffled = shuffle_dataset(dataset, seed)
    utterance_maps = [
        (spec.mode, make_utterances(dataset, spec, seed)) for spec in utterance_specs
    ]
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with out_path.open("w", encoding="utf-8", newline="\n") as handle:
        for table in shuffled.tables:
            for q in q_values:
                st = sample_rows(table, q)
                for masked in masked_modes:
                    view = mask_columns(st) if masked else st
                    header = [cell.raw for cell in view.header_cells]
                    rows = [[cell.raw for cell in row] for row in view.row_cells]
                    for _, utterances in utterance_maps:
                        request = {
                            "table_id": table.id,
                            "q": q,
                            "masked": masked,
                            "utterance": utterances[table.id],
                            "header": header,
                            "rows": rows,
                        }
                        for target in targets:
                            handle.write(
                                json.dumps({**request, "target": target}, sort_keys=True,
                                           ensure_ascii=False) + "\n"
                            )
                            count += 1
    return count


def hyperparameter_search(
    config: RunConfig,
    dataset: LabeledDataset,
    hidden_sizes: list[int],
    learning_rates: list[float],
    q: int = 3,
    masked: bool = False,
) -> list[dict]:
    """Grid-search hidden size x learning rate at one (q, masked) cell."""
    utterances = make_utterances(dataset, config.utterance, config.seed)
    results = []
    for hidden in hidden_sizes:
        for lr in learning_rates:
            encoder = build_encoder(config, dataset, utterances)
            cfg = dataclasses.replace(config.train, learning_rate=lr)
            report = run_cv(
                dataset, encoder, q, masked, cfg,
                k_folds=config.k_folds, seed=config.seed,
                fold_scoring=config.fold_scoring, hidden_size=hidden,
            )
            results.append({
                "hidden_size": hidden,
                "learning_rate": lr,
                "macro_f1": report.mean_macro_f1,
            })
            log.info("search hidden=%d lr=%g: macro-F1 %.4f", hidden, lr, report.mean_macro_f1)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "search.csv").open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("hidden_size,learning_rate,macro_f1\n")
        for row in results:
            handle.write(
                f"{row['hidden_size']},{row['learning_rate']:g},{row['macro_f1']:.6f}\n"
            )
    return results

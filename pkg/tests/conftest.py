"""Shared fixtures: tiny hand-built tables and synthetic labeled corpora."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from tabcls.tables import LabeledDataset, Table


def make_table(table_id: str, rows: list[list[str]]) -> Table:
    return Table.from_rows(table_id, rows)


@pytest.fixture
def city_table() -> Table:
    return make_table("cities", [["name", "pop"], ["berlin", "3.6M"]])


def synthetic_dataset(
    class_sizes: dict[str, int],
    n_rows: int = 6,
    n_cols: int = 3,
    seed: int = 0,
    vocab_per_class: int = 10,
) -> LabeledDataset:
    """Class-separable corpus: each class draws cells from its own token pool."""
    rng = np.random.default_rng(seed)
    entries = []
    for cls in sorted(class_sizes):
        pool = [f"{cls.lower()}w{i}" for i in range(vocab_per_class)]
        header = [f"{cls.lower()}col{j}" for j in range(n_cols)]
        for t in range(class_sizes[cls]):
            rows = [
                [str(rng.choice(pool)) + " " + str(rng.choice(pool)) for _ in range(n_cols)]
                for _ in range(n_rows)
            ]
            entries.append((make_table(f"{cls.lower()}_{t}", [header] + rows), cls))
    entries.sort(key=lambda e: e[0].id)
    return LabeledDataset(entries, sorted(class_sizes))


def write_dataset_dir(root: Path, dataset: LabeledDataset) -> Path:
    """Materialize a dataset as the canonical tables/ + gold.csv layout."""
    tables_dir = root / "tables"
    tables_dir.mkdir(parents=True, exist_ok=True)
    for table in dataset.tables:
        with (tables_dir / f"{table.id}.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for row in table.cells:
                writer.writerow([cell.raw for cell in row])
    with (root / "gold.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for table, label in dataset.entries:
            writer.writerow([table.id, label])
    return root


@pytest.fixture
def small_corpus() -> LabeledDataset:
    return synthetic_dataset({"City": 6, "Country": 6, "Animal": 6}, n_rows=5, seed=11)


def brute_force_macro_f1(y_true, y_pred, classes):
    """Independent oracle straight from the confusion-matrix definition."""
    scores = []
    for cls in classes:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return sum(scores) / len(scores)


def noise_dataset(k: int, per_class: int, seed: int) -> LabeledDataset:
    """Label-noise control: shared token pool, then labels randomly permuted."""
    rng = np.random.default_rng(seed)
    pool = [f"noise{i}" for i in range(40)]
    names = [f"Class{i}" for i in range(k)]
    entries = []
    for c, name in enumerate(names):
        for t in range(per_class):
            rows = [[str(rng.choice(pool)) for _ in range(3)] for _ in range(4)]
            header = [str(rng.choice(pool)) for _ in range(3)]
            entries.append((make_table(f"{name.lower()}_{t}", [header] + rows), name))
    labels = [label for _, label in entries]
    permuted = [labels[i] for i in rng.permutation(len(labels))]
    entries = [(table, new_label) for (table, _), new_label in zip(entries, permuted)]
    entries.sort(key=lambda e: e[0].id)
    return LabeledDataset(entries, sorted(names))

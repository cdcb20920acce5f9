"""Evaluation protocol: stratified K-fold, macro-averaged F1, fold averaging,
and row-normalized confusion matrices aggregated over folds.

Per-fold scores are computed over the classes present in that fold's truth
or predictions (``fold_scoring="present"``, the cross-validation convention
of mainstream tooling). Scoring every fold against the full class inventory
is available as ``fold_scoring="full"`` but caps per-fold macro-F1 well below
1.0 as soon as folds are smaller than the inventory.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import kernels, mlp
from .encoders import encode_dataset
from .errors import ConfigError, DataError
from .preprocess import sample_dataset, shuffle_dataset
from .tables import LabeledDataset

log = logging.getLogger(__name__)


@dataclass
class FoldPlan:
    k: int
    folds: list[tuple[np.ndarray, np.ndarray]]  # (train indices, test indices)
    seed: int


def stratified_folds(labels: Sequence, k: int, seed: int) -> FoldPlan:
    """Deal each class's shuffled instances round-robin across K folds.

    Per class, fold counts differ by at most one; the dealing pointer carries
    across classes so overall fold sizes stay balanced too. Classes with
    fewer than K instances appear in only some test folds (warned).
    """
    n = len(labels)
    if k < 2:
        raise ConfigError(f"K must be >= 2, got {k}")
    if k > n:
        raise ConfigError(f"K={k} exceeds the {n} available instances")
    by_class: dict = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)

    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    pointer = 0
    small = []
    for label in sorted(by_class):
        idxs = np.array(by_class[label], dtype=np.int64)
        rng.shuffle(idxs)
        if idxs.size < k:
            small.append(label)
        for j, idx in enumerate(idxs):
            fold_of[idx] = (pointer + j) % k
        pointer += idxs.size
    if small:
        log.warning(
            "%d classes have fewer than K=%d instances and are absent from "
            "some folds: %s", len(small), k, ", ".join(str(s) for s in small),
        )

    everything = np.arange(n)
    folds = [
        (everything[fold_of != f], everything[fold_of == f]) for f in range(k)
    ]
    return FoldPlan(k, folds, seed)


def macro_f1(y_true: Sequence, y_pred: Sequence, classes: Sequence) -> float:
    """Unweighted mean over ``classes`` of per-class F1 = 2PR/(P+R).

    A class with P+R = 0 (in particular one absent from both truth and
    predictions) contributes 0.
    """
    if len(y_true) != len(y_pred):
        raise ConfigError(f"length mismatch: {len(y_true)} truths vs {len(y_pred)} predictions")
    index = {label: i for i, label in enumerate(classes)}
    k = len(index)
    tp = np.zeros(k)
    fp = np.zeros(k)
    fn = np.zeros(k)
    for truth, pred in zip(y_true, y_pred):
        if truth not in index or pred not in index:
            raise ConfigError(f"label outside the class axis: {truth!r}/{pred!r}")
        if truth == pred:
            tp[index[truth]] += 1
        else:
            fn[index[truth]] += 1
            fp[index[pred]] += 1
    total = 0.0
    for i in range(k):
        precision = tp[i] / (tp[i] + fp[i]) if tp[i] + fp[i] > 0 else 0.0
        recall = tp[i] / (tp[i] + fn[i]) if tp[i] + fn[i] > 0 else 0.0
        if precision + recall > 0:
            total += 2.0 * precision * recall / (precision + recall)
    return total / k


def confusion_counts(y_true: Sequence, y_pred: Sequence, classes: Sequence) -> np.ndarray:
    """counts[i, j] = #(true = classes[i] and predicted = classes[j])."""
    index = {label: i for i, label in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for truth, pred in zip(y_true, y_pred):
        counts[index[truth], index[pred]] += 1
    return counts


def row_normalize(counts: np.ndarray) -> np.ndarray:
    """Divide each row by its sum; all-zero rows stay zero."""
    counts = np.asarray(counts, dtype=np.float64)
    sums = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, sums, out=np.zeros_like(counts), where=sums > 0)


@dataclass
class EvalReport:
    per_fold_macro_f1: list[float]
    mean_macro_f1: float
    pooled_macro_f1: float
    classes: list[str]  # confusion axis, ordered by descending instance count
    confusion: np.ndarray
    confusion_row_normalized: np.ndarray
    manifest: dict

    def to_dict(self) -> dict:
        return {
            "mean_macro_f1": self.mean_macro_f1,
            "pooled_macro_f1": self.pooled_macro_f1,
            "per_fold_macro_f1": self.per_fold_macro_f1,
            "classes": self.classes,
            "confusion": self.confusion.tolist(),
            "confusion_row_normalized": self.confusion_row_normalized.tolist(),
            "manifest": self.manifest,
        }

    def save(self, out_dir: str | Path) -> None:
        """Write report.json plus confusion.csv / scores.csv for plotting."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with (out_dir / "scores.csv").open("w", encoding="utf-8", newline="\n") as handle:
            handle.write("fold,macro_f1\n")
            for i, score in enumerate(self.per_fold_macro_f1):
                handle.write(f"{i},{score:.6f}\n")
            handle.write(f"mean,{self.mean_macro_f1:.6f}\n")
        header = "class," + ",".join(self.classes) + "\n"
        with (out_dir / "confusion.csv").open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(header)
            for name, row in zip(self.classes, self.confusion):
                handle.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")
        with (out_dir / "confusion_normalized.csv").open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(header)
            for name, row in zip(self.classes, self.confusion_row_normalized):
                handle.write(name + "," + ",".join(f"{v:.6f}" for v in row) + "\n")


def _fold_seed(base_seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([base_seed, fold]).generate_state(1)[0])


def run_cv(
    dataset: LabeledDataset,
    encoder,
    q: int,
    masked: bool,
    train_cfg: mlp.TrainConfig,
    k_folds: int = 20,
    seed: int = 0,
    *,
    fold_scoring: str = "present",
    transductive_fit: bool = False,
    hidden_size: int = 500,
    train_fn: Callable | None = None,
    manifest_extra: dict | None = None,
) -> EvalReport:
    """Full cross-validated evaluation of one (encoder, q, masked) cell.

    Rows are shuffled once (per-table permutations keyed on ``seed``), the
    first q rows sampled, and per fold: fit-able encoder state is fitted on
    the training tables only (unless ``transductive_fit``), the classifier is
    trained on the training vectors, and macro-F1 is computed on the test
    vectors. Confusion counts aggregate the pooled test predictions.
    """
    if fold_scoring not in ("present", "full"):
        raise ConfigError(f"unknown fold_scoring {fold_scoring!r}")
    if not dataset.entries:
        raise DataError("empty dataset")

    shuffled = shuffle_dataset(dataset, seed)
    sampled = sample_dataset(shuffled, q, masked)
    y_all = np.asarray(dataset.label_indices(), dtype=np.int64)
    k_classes = dataset.k
    plan = stratified_folds(dataset.labels, k_folds, seed)

    if train_fn is None:
        def train_fn(X, y, cfg, n_classes):
            return mlp.train(X, y, cfg, n_classes=n_classes, hidden_size=hidden_size)

    refit_per_fold = getattr(encoder, "requires_fit", False) and not transductive_fit
    X_all = None
    if not refit_per_fold:
        if getattr(encoder, "requires_fit", False):
            encoder.fit(sampled)
        X_all = encode_dataset(encoder, sampled)

    fold_scores: list[float] = []
    pooled_true: list[int] = []
    pooled_pred: list[int] = []
    for fold, (train_idx, test_idx) in enumerate(plan.folds):
        if refit_per_fold:
            train_tables = [sampled[i] for i in train_idx]
            encoder.fit(train_tables)
            X_train = encode_dataset(encoder, train_tables)
            X_test = encode_dataset(encoder, [sampled[i] for i in test_idx])
        else:
            X_train, X_test = X_all[train_idx], X_all[test_idx]
        cfg = dataclasses.replace(train_cfg, seed=_fold_seed(train_cfg.seed, fold))
        params = train_fn(X_train, y_all[train_idx], cfg, k_classes)
        y_pred = np.atleast_1d(mlp.predict(params, X_test))
        y_true = y_all[test_idx]
        if fold_scoring == "present":
            axis = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
        else:
            axis = list(range(k_classes))
        fold_scores.append(macro_f1(y_true.tolist(), y_pred.tolist(), axis))
        pooled_true.extend(y_true.tolist())
        pooled_pred.extend(int(v) for v in y_pred)

    histogram = {name: 0 for name in dataset.classes}
    for label in dataset.labels:
        histogram[label] += 1
    ordered_names = sorted(dataset.classes, key=lambda name: (-histogram[name], name))
    name_of = {i: name for i, name in enumerate(dataset.classes)}
    counts = confusion_counts(
        [name_of[i] for i in pooled_true], [name_of[i] for i in pooled_pred], ordered_names
    )
    pooled = macro_f1(pooled_true, pooled_pred, list(range(k_classes)))

    manifest = {
        "encoder": getattr(encoder, "name", type(encoder).__name__),
        "encoder_stats": encoder.stats() if hasattr(encoder, "stats") else {},
        "q": q,
        "masked": masked,
        "k_folds": k_folds,
        "seed": seed,
        "fold_scoring": fold_scoring,
        "transductive_fit": transductive_fit,
        "hidden_size": hidden_size,
        "train_config": dataclasses.asdict(train_cfg),
        "kernel_backend": kernels.BACKEND,
        "n_tables": len(dataset),
        "n_classes": k_classes,
        "class_order": ordered_names,
    }
    if manifest_extra:
        manifest.update(manifest_extra)

    return EvalReport(
        per_fold_macro_f1=fold_scores,
        mean_macro_f1=float(np.mean(fold_scores)),
        pooled_macro_f1=pooled,
        classes=ordered_names,
        confusion=counts,
        confusion_row_normalized=row_normalize(counts),
        manifest=manifest,
    )

"""Corpus ingestion: WDC JSON and CSV table loaders, gold standard, filtering.

The canonical dataset layout is a directory with ``tables/`` (one ``.json``
WDC document or ``.csv`` file per table) plus ``gold.csv`` mapping table ids
to class names.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .tables import ClassLabel, LabeledDataset, Table

log = logging.getLogger(__name__)

# Gold-standard id columns in the wild carry the table file name; these
# suffixes are stripped so ids join against file stems.
_ID_SUFFIXES = (".json", ".csv", ".tar.gz")


@dataclass
class CorpusStats:
    table_count: int
    class_count: int
    mean_rows: float
    mean_cols: float
    class_histogram: dict[str, int]


def _transpose(relation: list[list[str]]) -> list[list[str]]:
    return [list(row) for row in zip(*relation)]


def load_wdc_table(path: str | Path) -> Table:
    """Parse one WDC-format table document into a row-major Table.

    The dump stores ``relation`` column-major for horizontal tables (each
    inner array is one attribute column, header entry first); those are
    transposed. Vertically oriented documents already hold attribute rows
    and are taken as-is. The table id is the file stem.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8", errors="replace")
        doc = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot parse WDC document: {exc}") from exc
    if not isinstance(doc, dict) or "relation" not in doc:
        raise DataError(f"{path}: not a WDC table document (no 'relation')")
    relation = doc["relation"]
    if not relation or not all(isinstance(part, list) for part in relation):
        raise DataError(f"{path}: empty or malformed relation")
    width = len(relation[0])
    if width == 0:
        raise DataError(f"{path}: empty relation")
    for i, part in enumerate(relation):
        if len(part) != width:
            raise DataError(f"{path}: ragged relation at array {i}")

    orientation = str(doc.get("tableOrientation", "HORIZONTAL")).upper()
    rows = relation if orientation == "VERTICAL" else _transpose(relation)

    header_pos = str(doc.get("headerPosition", "FIRST_ROW")).upper()
    if header_pos != "FIRST_ROW":
        log.warning("%s: headerPosition %r, treating first row as header", path, header_pos)
    if not doc.get("hasHeader", True):
        log.warning("%s: hasHeader is false, treating first row as header", path)

    rows = [[str(value) for value in row] for row in rows]
    if len(rows) < 2:
        raise DataError(f"{path}: no content rows after normalization")
    return Table.from_rows(path.stem, rows)


def load_csv_table(path: str | Path) -> Table:
    """Parse an RFC-4180-style CSV table; the first record is the header."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            records = list(csv.reader(handle))
    except OSError as exc:
        raise DataError(f"{path}: cannot read: {exc}") from exc
    records = [row for row in records if row]
    if len(records) < 2:
        raise DataError(f"{path}: needs a header record plus at least one content record")
    width = len(records[0])
    for i, row in enumerate(records):
        if len(row) != width:
            raise DataError(f"{path}: ragged CSV, record {i} has {len(row)} fields, expected {width}")
    return Table.from_rows(path.stem, records)


def load_gold_standard(path: str | Path) -> dict[str, ClassLabel]:
    """Read the ``table_id,class_name[,class_uri]`` gold standard CSV.

    Duplicate consistent rows collapse; a duplicate id with a conflicting
    class is an error. Ids keep their file stem (a trailing .json/.csv
    extension is stripped), class names are whitespace-trimmed.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"gold standard {path} does not exist")
    gold: dict[str, ClassLabel] = {}
    with path.open(encoding="utf-8", newline="") as handle:
        for i, row in enumerate(csv.reader(handle)):
            if not row:
                continue
            if len(row) < 2:
                raise DataError(f"{path}: record {i} has fewer than 2 columns")
            table_id = row[0].strip()
            for suffix in _ID_SUFFIXES:
                if table_id.endswith(suffix):
                    table_id = table_id[: -len(suffix)]
                    break
            label = row[1].strip()
            if table_id in gold and gold[table_id] != label:
                raise DataError(
                    f"{path}: conflicting annotations for {table_id!r}: "
                    f"{gold[table_id]!r} vs {label!r}"
                )
            gold[table_id] = label
    return gold


def load_table_dir(tables_dir: str | Path) -> list[Table]:
    """Load every .json/.csv table under a directory, sorted by file name.

    Tables that fail to parse or have no content rows are dropped with a
    warning so one bad dump file does not sink a 200-table ingest.
    """
    tables_dir = Path(tables_dir)
    if not tables_dir.is_dir():
        raise DataError(f"table directory {tables_dir} does not exist")
    tables: list[Table] = []
    dropped = 0
    for path in sorted(tables_dir.iterdir()):
        if path.suffix == ".json":
            loader = load_wdc_table
        elif path.suffix == ".csv":
            loader = load_csv_table
        else:
            continue
        try:
            tables.append(loader(path))
        except DataError as exc:
            dropped += 1
            log.warning("dropping table: %s", exc)
    if dropped:
        log.warning("dropped %d unparseable or empty tables", dropped)
    return tables


def assemble_dataset(
    tables: list[Table],
    gold: dict[str, ClassLabel],
    min_class_count: int = 2,
) -> LabeledDataset:
    """Join tables with their annotations and apply the class-frequency filter.

    Keeps only tables whose class has at least ``min_class_count`` member
    tables after the join. Tables lacking an annotation are dropped with a
    logged count. Entries are ordered by table id and the class inventory
    lexicographically, so ingestion is deterministic.
    """
    if min_class_count < 1:
        raise DataError(f"min_class_count must be >= 1, got {min_class_count}")
    annotated = [(t, gold[t.id]) for t in tables if t.id in gold]
    unannotated = len(tables) - len(annotated)
    if unannotated:
        log.info("dropping %d tables without gold annotations", unannotated)

    histogram: dict[str, int] = {}
    for _, label in annotated:
        histogram[label] = histogram.get(label, 0) + 1
    kept_classes = {c for c, n in histogram.items() if n >= min_class_count}
    filtered = [(t, label) for t, label in annotated if label in kept_classes]
    removed = len(annotated) - len(filtered)
    if removed:
        log.info(
            "class filter (min %d tables) removed %d tables in %d classes",
            min_class_count, removed, len(histogram) - len(kept_classes),
        )
    if not filtered:
        raise DataError("no tables left after joining gold standard and class filter")
    filtered.sort(key=lambda entry: entry[0].id)
    return LabeledDataset(filtered, sorted(kept_classes))


def corpus_stats(dataset: LabeledDataset) -> CorpusStats:
    """Table/class counts, mean content-row and column counts, class histogram."""
    if not dataset.entries:
        raise DataError("empty dataset")
    histogram: dict[str, int] = {name: 0 for name in dataset.classes}
    for _, label in dataset.entries:
        histogram[label] += 1
    n = len(dataset.entries)
    return CorpusStats(
        table_count=n,
        class_count=dataset.k,
        mean_rows=sum(t.n_rows for t in dataset.tables) / n,
        mean_cols=sum(t.n_cols for t in dataset.tables) / n,
        class_histogram=histogram,
    )

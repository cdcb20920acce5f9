"""Word-vector lexicons and precomputed neural table-vector stores.

Lexicon files use the plain-text ``.vec`` format: a ``<count> <dim>`` header
line, then one ``token v1 .. v_dim`` line per entry. Precomputed table
vectors arrive as JSONL, one record per (table, granularity, q, masked,
utterance) key, produced by the bridge.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, MissingVectorsError

log = logging.getLogger(__name__)

# (table_id, granularity, masked, q, utterance)
VectorKey = tuple[str, str, bool, int, str]


@dataclass
class EmbeddingLexicon:
    """Token -> vector map with a fixed dimension. Immutable after load."""

    dim: int
    entries: dict[str, np.ndarray]
    name: str = ""

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, token: str) -> np.ndarray | None:
        """Exact-match lookup; None for out-of-vocabulary tokens."""
        return self.entries.get(token)

    def coverage(self, tokens: list[str]) -> tuple[int, int]:
        """(in-vocabulary occurrences, total occurrences) over a token list."""
        hits = sum(1 for tok in tokens if tok in self.entries)
        return hits, len(tokens)


def load_vec_file(
    path: str | Path,
    vocab_limit: int | None = None,
    restrict_to: set[str] | None = None,
) -> EmbeddingLexicon:
    """Load a ``.vec`` lexicon, optionally bounded.

    ``vocab_limit`` keeps only the first N entries in file order;
    ``restrict_to`` keeps only tokens in the given set (pass the corpus
    vocabulary to avoid materializing a multi-million-token lexicon).
    Vectors are stored as float32; pooling accumulates in float64.
    """
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    try:
        handle = path.open(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise DataError(f"{path}: cannot read: {exc}") from exc
    with handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: line 1: expected '<count> <dim>' header")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise DataError(f"{path}: line 1: non-integer header") from exc
        if dim < 1:
            raise DataError(f"{path}: line 1: dim must be positive")
        budget = count if vocab_limit is None else min(count, vocab_limit)
        seen = 0
        for lineno, line in enumerate(handle, start=2):
            if seen >= budget:
                break
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            if len(parts) != dim + 1:
                raise DataError(
                    f"{path}: line {lineno}: expected {dim} values, got {len(parts) - 1}"
                )
            token = parts[0]
            seen += 1
            if restrict_to is not None and token not in restrict_to:
                continue
            if token in entries:
                log.warning("%s: line %d: duplicate token %r, keeping first", path, lineno, token)
                continue
            try:
                entries[token] = np.asarray([float(v) for v in parts[1:]], dtype=np.float32)
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: non-numeric value") from exc
    return EmbeddingLexicon(dim=dim, entries=entries, name=path.name)


def save_vec_file(lexicon: EmbeddingLexicon, path: str | Path) -> None:
    """Debug serializer mirroring load_vec_file (6 decimal places)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(f"{len(lexicon.entries)} {lexicon.dim}\n")
        for token, vec in lexicon.entries.items():
            values = " ".join(f"{v:.6f}" for v in vec)
            handle.write(f"{token} {values}\n")


@dataclass
class PrecomputedTableVectors:
    """One bridge output record: row- or column-granular vectors for a table."""

    table_id: str
    granularity: str  # "row" | "column"
    q: int
    masked: bool
    utterance: str
    dim: int
    vectors: np.ndarray  # (n, dim) float32

    @property
    def key(self) -> VectorKey:
        return (self.table_id, self.granularity, self.masked, self.q, self.utterance)


@dataclass
class VectorStore:
    """Indexed precomputed vectors keyed by (table, granularity, masked, q, utterance)."""

    records: dict[VectorKey, PrecomputedTableVectors] = field(default_factory=dict)
    dim: int = 0
    source: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def add(self, record: PrecomputedTableVectors) -> None:
        if record.key in self.records:
            raise DataError(f"{self.source}: duplicate vector record for key {record.key}")
        if self.dim == 0:
            self.dim = record.dim
        elif record.dim != self.dim:
            raise DataError(
                f"{self.source}: dim {record.dim} for key {record.key} "
                f"conflicts with store dim {self.dim}"
            )
        self.records[record.key] = record

    def get(
        self, table_id: str, granularity: str, masked: bool, q: int, utterance: str
    ) -> PrecomputedTableVectors:
        key: VectorKey = (table_id, granularity, masked, q, utterance)
        record = self.records.get(key)
        if record is None:
            raise MissingVectorsError(
                f"no precomputed vectors for key {key} in {self.source or 'store'}; "
                f"run the bridge over the exported requests to produce them"
            )
        return record


def _parse_record(obj: dict, where: str) -> PrecomputedTableVectors:
    try:
        table_id = str(obj["table_id"])
        granularity = str(obj["granularity"])
        q = int(obj["q"])
        masked = bool(obj["masked"])
        utterance = str(obj["utterance"])
        dim = int(obj["dim"])
        raw_vectors = obj["vectors"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: malformed vector record: {exc}") from exc
    if granularity not in ("row", "column"):
        raise DataError(f"{where}: granularity must be 'row' or 'column', got {granularity!r}")
    if not raw_vectors:
        raise DataError(f"{where}: empty vector list")
    for vec in raw_vectors:
        if len(vec) != dim:
            raise DataError(f"{where}: vector of length {len(vec)}, declared dim {dim}")
    vectors = np.asarray(raw_vectors, dtype=np.float32)
    if not np.all(np.isfinite(vectors)):
        raise DataError(f"{where}: non-finite vector entries")
    return PrecomputedTableVectors(table_id, granularity, q, masked, utterance, dim, vectors)


def load_precomputed(path: str | Path) -> VectorStore:
    """Load a bridge-output JSONL file into an indexed store."""
    path = Path(path)
    if not path.exists():
        raise MissingVectorsError(f"precomputed vector file {path} does not exist")
    store = VectorStore(source=str(path))
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            store.add(_parse_record(obj, f"{path}: line {lineno}"))
    return store

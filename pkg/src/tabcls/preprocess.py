"""Input transformations: seeded row shuffling, q-row sampling, header masking,
and table-to-sequence serialization.

All transforms are pure; the shuffled dataset is computed once per experiment
suite and reused for every q so that per-q samples are nested prefixes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .tables import Cell, LabeledDataset, Table, TableSequence
from .text import MASK_TOKEN, tokenize  # noqa: F401  (tokenize is public API here)

_MASK_CELL = Cell(MASK_TOKEN)


@dataclass
class SampledTable:
    """A shuffled table restricted to its first ``q`` content rows.

    ``rows`` indexes into ``base.content``; it is always the prefix
    0..min(q, N)-1 of the already-shuffled table. When ``masked`` is set the
    header is exposed as [UNK] cells without touching the base table.
    """

    base: Table
    q_requested: int
    rows: list[int]
    masked: bool = False

    @property
    def header_cells(self) -> list[Cell]:
        if self.masked:
            return [_MASK_CELL] * self.base.n_cols
        return self.base.header

    @property
    def row_cells(self) -> list[list[Cell]]:
        content = self.base.content
        return [content[i] for i in self.rows]


def _table_rng(seed: int, table_id: str) -> np.random.Generator:
    # Permutations hang off (seed, table id), not corpus order, so loading
    # order cannot change the shuffle. hashlib keeps it stable across runs.
    digest = hashlib.blake2b(table_id.encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng([seed, int.from_bytes(digest, "big")])


def shuffle_rows(table: Table, seed: int) -> Table:
    """Permute content rows with a deterministic per-(seed, id) permutation."""
    order = _table_rng(seed, table.id).permutation(table.n_rows)
    content = table.content
    return Table(table.id, [table.header] + [content[i] for i in order])


def shuffle_dataset(dataset: LabeledDataset, seed: int) -> LabeledDataset:
    """Shuffle every table once; reuse the result for all q of a suite."""
    entries = [(shuffle_rows(t, seed), label) for t, label in dataset.entries]
    return LabeledDataset(entries, list(dataset.classes))


def sample_rows(table: Table, q: int) -> SampledTable:
    """Take the first q content rows of an already-shuffled table.

    q larger than the table clamps to all rows, so every table survives
    every q setting.
    """
    if q < 1:
        raise ConfigError(f"q must be >= 1, got {q}")
    return SampledTable(table, q, list(range(min(q, table.n_rows))))


def mask_columns(sampled: SampledTable) -> SampledTable:
    """Replace every header cell with the [UNK] literal. Idempotent."""
    if sampled.masked:
        return sampled
    return replace(sampled, masked=True)


def header_sequence(sampled: SampledTable) -> TableSequence:
    tokens = [tok for cell in sampled.header_cells for tok in cell.tokens]
    return TableSequence(tokens, "header")


def body_sequence(sampled: SampledTable) -> TableSequence:
    tokens = [tok for row in sampled.row_cells for cell in row for tok in cell.tokens]
    return TableSequence(tokens, "body")


def table_sequence(sampled: SampledTable) -> TableSequence:
    """Header tokens followed by the sampled rows' tokens, row-major."""
    tokens = header_sequence(sampled).tokens + body_sequence(sampled).tokens
    return TableSequence(tokens, "table")


def row_sequences(sampled: SampledTable) -> list[TableSequence]:
    """One plain-token sequence per sampled content row, header excluded."""
    return [
        TableSequence([tok for cell in row for tok in cell.tokens], "row")
        for row in sampled.row_cells
    ]


def sample_dataset(
    dataset: LabeledDataset, q: int, masked: bool
) -> list[SampledTable]:
    """Sample (and optionally mask) every table of a pre-shuffled dataset."""
    out = []
    for table in dataset.tables:
        st = sample_rows(table, q)
        out.append(mask_columns(st) if masked else st)
    return out

"""Core domain model: entity tables, labeled corpora, token sequences.

A table is an (N+1) x M cell matrix whose first row is the header; N counts
content rows only. Tables and datasets are immutable by convention after
construction and safe to share across workers.

Feature vectors are plain 1-D numpy arrays; encoders validate that they are
finite and of uniform dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple

from .errors import DataError
from .text import tokenize

# A class label is the bare schema class name.
ClassLabel = str


@dataclass(eq=True)
class Cell:
    """One table cell. Text is stored verbatim apart from edge whitespace."""

    raw: str

    def __post_init__(self) -> None:
        self.raw = self.raw.strip()

    @cached_property
    def tokens(self) -> list[str]:
        return tokenize(self.raw)


class Column(NamedTuple):
    """A table column with its header entry kept separate from the body."""

    header: Cell
    body: list[Cell]


@dataclass(eq=True)
class Table:
    """An entity table: row 0 of ``cells`` is the header, the rest content."""

    id: str
    cells: list[list[Cell]]

    def __post_init__(self) -> None:
        if len(self.cells) < 2:
            raise DataError(
                f"table {self.id!r}: needs a header row plus at least one content row"
            )
        width = len(self.cells[0])
        if width < 1:
            raise DataError(f"table {self.id!r}: zero columns")
        for i, row in enumerate(self.cells):
            if len(row) != width:
                raise DataError(
                    f"table {self.id!r}: ragged matrix, row {i} has {len(row)} cells, "
                    f"expected {width}"
                )

    @classmethod
    def from_rows(cls, table_id: str, rows: list[list[str]]) -> "Table":
        return cls(table_id, [[Cell(value) for value in row] for row in rows])

    @property
    def n_rows(self) -> int:
        """Content row count (header excluded)."""
        return len(self.cells) - 1

    @property
    def n_cols(self) -> int:
        return len(self.cells[0])

    @property
    def header(self) -> list[Cell]:
        return self.cells[0]

    @property
    def content(self) -> list[list[Cell]]:
        return self.cells[1:]

    def column(self, m: int) -> Column:
        if not 0 <= m < self.n_cols:
            raise IndexError(
                f"table {self.id!r}: column {m} out of range 0..{self.n_cols - 1}"
            )
        return Column(self.cells[0][m], [row[m] for row in self.cells[1:]])


@dataclass
class TableSequence:
    """Ordered token sequence derived from a table scope.

    ``origin`` is one of "table" (header + body), "header", "body", "row".
    Token order preserves row-major cell order within the scope.
    """

    tokens: list[str]
    origin: str

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)


@dataclass
class LabeledDataset:
    """Class-annotated table corpus with its ordered class inventory."""

    entries: list[tuple[Table, ClassLabel]]
    classes: list[ClassLabel] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.classes:
            self.classes = sorted({label for _, label in self.entries})
        inventory = set(self.classes)
        seen_ids: set[str] = set()
        for table, label in self.entries:
            if label not in inventory:
                raise DataError(
                    f"table {table.id!r}: label {label!r} not in the class inventory"
                )
            if table.id in seen_ids:
                raise DataError(f"duplicate table id {table.id!r}")
            seen_ids.add(table.id)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def tables(self) -> list[Table]:
        return [table for table, _ in self.entries]

    @property
    def labels(self) -> list[ClassLabel]:
        return [label for _, label in self.entries]

    def label_indices(self) -> list[int]:
        """Labels as indices into ``classes``."""
        index = {name: i for i, name in enumerate(self.classes)}
        return [index[label] for _, label in self.entries]

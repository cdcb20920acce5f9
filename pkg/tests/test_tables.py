import numpy as np
import pytest

from tabcls.errors import DataError
from tabcls.tables import Cell, LabeledDataset, Table
from tabcls.text import tokenize

from conftest import make_table


def test_header_and_content(city_table):
    assert [c.raw for c in city_table.header] == ["name", "pop"]
    assert [[c.raw for c in row] for row in city_table.content] == [["berlin", "3.6M"]]


def test_counts_exclude_header(city_table):
    assert city_table.n_rows == 1
    assert city_table.n_cols == 2


def test_column_access(city_table):
    col0 = city_table.column(0)
    assert col0.header.raw == "name"
    assert [c.raw for c in col0.body] == ["berlin"]
    col1 = city_table.column(1)
    assert (col1.header.raw, col1.body[0].raw) == ("pop", "3.6M")


def test_column_out_of_range(city_table):
    with pytest.raises(IndexError):
        city_table.column(2)


def test_round_trip_identity(city_table):
    assert [city_table.header] + city_table.content == city_table.cells


def test_structural_equality():
    a = make_table("t", [["h"], ["x"]])
    b = make_table("t", [["h"], ["x"]])
    c = make_table("t2", [["h"], ["x"]])
    assert a == b
    assert a != c


def test_rejects_ragged_matrices_fuzz():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n_rows = int(rng.integers(2, 6))
        width = int(rng.integers(1, 5))
        rows = [["x"] * width for _ in range(n_rows)]
        bad_row = int(rng.integers(0, n_rows))
        delta = int(rng.choice([-1, 1])) if width > 1 else 1
        rows[bad_row] = ["x"] * (width + delta)
        with pytest.raises(DataError):
            make_table("fuzz", rows)


def test_rejects_header_only_table():
    with pytest.raises(DataError):
        make_table("t", [["a", "b"]])


def test_cell_strips_edge_whitespace_only():
    cell = Cell("  New York  ")
    assert cell.raw == "New York"
    assert cell.tokens == ["new", "york"]


def test_empty_cell_tokenizes_to_nothing():
    assert Cell("").tokens == []
    assert Cell("  ,;  ").tokens == []


def test_tokenize_rules():
    assert tokenize("New York") == ["new", "york"]
    assert tokenize("") == []
    assert tokenize("U.S. 1,234") == ["u", "s", "1", "234"]
    assert tokenize("[UNK]") == ["unk"]


def test_dataset_validation():
    t1 = make_table("a", [["h"], ["x"]])
    t2 = make_table("b", [["h"], ["y"]])
    ds = LabeledDataset([(t1, "C1"), (t2, "C2")])
    assert ds.classes == ["C1", "C2"]
    assert ds.k == 2
    assert ds.label_indices() == [0, 1]

    with pytest.raises(DataError):
        LabeledDataset([(t1, "C1"), (t1, "C1")])  # duplicate id
    with pytest.raises(DataError):
        LabeledDataset([(t1, "C1")], classes=["Other"])  # label outside inventory

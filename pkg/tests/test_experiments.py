import json

import numpy as np
import pytest

from tabcls.errors import ConfigError
from tabcls.experiments import (
    RunConfig,
    UtteranceSpec,
    build_encoder,
    export_bridge_requests,
    make_utterances,
    run_grid,
)
from tabcls.mlp import TrainConfig

from conftest import synthetic_dataset, write_dataset_dir


def test_utterance_empty(small_corpus):
    out = make_utterances(small_corpus, UtteranceSpec("empty"), seed=0)
    assert set(out.values()) == {" "}
    assert set(out) == {t.id for t in small_corpus.tables}


def test_utterance_constant(small_corpus):
    out = make_utterances(small_corpus, UtteranceSpec("constant", "Thing"), seed=0)
    assert set(out.values()) == {"Thing"}


def test_utterance_correct_class(small_corpus):
    out = make_utterances(small_corpus, UtteranceSpec("correct-class"), seed=0)
    for table, label in small_corpus.entries:
        assert out[table.id] == label


def test_utterance_wrong_class_fixed_point_free(small_corpus):
    for seed in range(10):
        out = make_utterances(small_corpus, UtteranceSpec("wrong-class"), seed=seed)
        for table, label in small_corpus.entries:
            assert out[table.id] != label
            assert out[table.id] in small_corpus.classes


def test_utterance_wrong_class_needs_two_classes():
    ds = synthetic_dataset({"Only": 3}, seed=1)
    with pytest.raises(ConfigError):
        make_utterances(ds, UtteranceSpec("wrong-class"), seed=0)


def test_utterance_random10_unique_seeded(small_corpus):
    a = make_utterances(small_corpus, UtteranceSpec("random10"), seed=4)
    b = make_utterances(small_corpus, UtteranceSpec("random10"), seed=4)
    assert a == b
    assert all(len(text) == 10 for text in a.values())
    assert len(set(a.values())) == len(a)


def test_utterance_unknown_mode():
    with pytest.raises(ConfigError):
        UtteranceSpec("nonsense")


def grid_config(root, out, **overrides):
    defaults = dict(
        dataset_dir=str(root),
        encoder_id="tfidf",
        q_values=[1, 3],
        masked_modes=[False, True],
        k_folds=3,
        seed=0,
        out_dir=str(out),
        hidden_size=16,
        train=TrainConfig(max_epochs=40, seed=0),
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


def test_run_grid_cell_cardinality(tmp_path, small_corpus):
    root = write_dataset_dir(tmp_path / "data", small_corpus)
    config = grid_config(root, tmp_path / "out")
    reports = run_grid(config, small_corpus)
    assert set(reports) == {(1, False), (1, True), (3, False), (3, True)}
    summary = (tmp_path / "out" / "summary.csv").read_text().strip().splitlines()
    assert summary[0] == "encoder,q,masked,macro_f1"
    assert len(summary) == 5
    for q, masked in reports:
        cell = tmp_path / "out" / "tfidf" / f"q{q}_{'masked' if masked else 'visible'}"
        assert (cell / "report.json").exists()


def test_run_grid_summary_traceable(tmp_path, small_corpus):
    root = write_dataset_dir(tmp_path / "data", small_corpus)
    config = grid_config(root, tmp_path / "out")
    reports = run_grid(config, small_corpus)
    for line in (tmp_path / "out" / "summary.csv").read_text().strip().splitlines()[1:]:
        encoder, q, masked, score = line.split(",")
        cell = tmp_path / "out" / encoder / f"q{q}_{'masked' if masked == 'true' else 'visible'}"
        stored = json.loads((cell / "report.json").read_text())
        assert f"{stored['mean_macro_f1']:.6f}" == score
        assert stored["mean_macro_f1"] == reports[(int(q), masked == "true")].mean_macro_f1


def test_run_grid_deterministic_summary(tmp_path, small_corpus):
    root = write_dataset_dir(tmp_path / "data", small_corpus)
    run_grid(grid_config(root, tmp_path / "out1"), small_corpus)
    run_grid(grid_config(root, tmp_path / "out2"), small_corpus)
    assert (tmp_path / "out1" / "summary.csv").read_bytes() == \
        (tmp_path / "out2" / "summary.csv").read_bytes()


def test_run_grid_workers_match_sequential(tmp_path, small_corpus):
    root = write_dataset_dir(tmp_path / "data", small_corpus)
    run_grid(grid_config(root, tmp_path / "seq"), small_corpus)
    run_grid(grid_config(root, tmp_path / "par", workers=2), small_corpus)
    assert (tmp_path / "seq" / "summary.csv").read_bytes() == \
        (tmp_path / "par" / "summary.csv").read_bytes()


def test_build_encoder_unknown_id(tmp_path, small_corpus):
    config = grid_config(tmp_path, tmp_path / "out", encoder_id="nonsense")
    with pytest.raises(ConfigError):
        build_encoder(config, small_corpus, " ")


def test_export_requests_counting(tmp_path, small_corpus):
    two = synthetic_dataset({"A": 1, "B": 1}, n_rows=4, seed=2)
    out = tmp_path / "requests.jsonl"
    count = export_bridge_requests(
        two, out, q_values=[1, 3], masked_modes=[False],
        utterance_specs=[UtteranceSpec("empty")], targets=["rowwise"], seed=0,
    )
    lines = out.read_text().strip().splitlines()
    assert count == len(lines) == 4  # 2 tables x 2 q x 1 masked x 1 utterance x 1 target


def test_export_requests_masked_header_contract(tmp_path, small_corpus):
    out = tmp_path / "requests.jsonl"
    export_bridge_requests(
        small_corpus, out, q_values=[2], masked_modes=[True],
        utterance_specs=[UtteranceSpec("empty")], targets=["rowwise"], seed=0,
    )
    for line in out.read_text().strip().splitlines():
        request = json.loads(line)
        assert set(request["header"]) == {"[UNK]"}
        assert request["masked"] is True
        assert len(request["rows"]) <= 2


def test_export_requests_cover_grid_keyspace(tmp_path, small_corpus):
    out = tmp_path / "requests.jsonl"
    q_values, masked_modes, targets = [1, 3], [False, True], ["rowwise", "columnwise"]
    export_bridge_requests(
        small_corpus, out, q_values, masked_modes,
        [UtteranceSpec("empty")], targets, seed=0,
    )
    got = set()
    for line in out.read_text().strip().splitlines():
        request = json.loads(line)
        got.add((request["table_id"], request["q"], request["masked"],
                 request["utterance"], request["target"]))
    want = {
        (t.id, q, masked, " ", target)
        for t in small_corpus.tables
        for q in q_values for masked in masked_modes for target in targets
    }
    assert got == want


def test_export_requests_deterministic(tmp_path, small_corpus):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for path in (a, b):
        export_bridge_requests(
            small_corpus, path, [1, 3], [False, True],
            [UtteranceSpec("empty")], ["rowwise"], seed=9,
        )
    assert a.read_bytes() == b.read_bytes()


def test_export_requests_rows_follow_shuffle(tmp_path):
    ds = synthetic_dataset({"A": 2, "B": 2}, n_rows=6, seed=7)
    out = tmp_path / "r.jsonl"
    export_bridge_requests(ds, out, [3], [False], [UtteranceSpec("empty")],
                           ["rowwise"], seed=1)
    from tabcls.preprocess import sample_rows, shuffle_dataset

    shuffled = shuffle_dataset(ds, 1)
    expected = {
        t.id: [[c.raw for c in row] for row in sample_rows(t, 3).row_cells]
        for t in shuffled.tables
    }
    for line in out.read_text().strip().splitlines():
        request = json.loads(line)
        assert request["rows"] == expected[request["table_id"]]

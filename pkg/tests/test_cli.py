"""Command line workflows over a small on-disk corpus."""

from __future__ import annotations

import json
import shutil

import numpy as np
import pytest

from radbar.cli import main
from radbar.datastore import load_index
from radbar.imagecore import load_grayscale
from radbar.synthetic import synthesize_image
from radbar.imagecore import save_pgm

from conftest import write_corpus


@pytest.fixture
def corpus(tmp_path):
    manifest = write_corpus(tmp_path / "data", count=10, size=16)
    index_path = tmp_path / "index.jsonl"
    code = main(
        [
            "build-index",
            "--manifest", str(manifest),
            "--out", str(index_path),
            "--rbc-side", "8",
            "--rbc-angles", "2",
            "--cnnc-dim", "16",
        ]
    )
    assert code == 0
    return manifest, index_path


class TestBuildIndex:
    def test_summary_printed(self, tmp_path, capsys):
        manifest = write_corpus(tmp_path / "data", count=6, size=16)
        out = tmp_path / "idx.jsonl"
        code = main(
            [
                "build-index",
                "--manifest", str(manifest),
                "--out", str(out),
                "--rbc-side", "8",
                "--rbc-angles", "2",
                "--cnnc-dim", "16",
            ]
        )
        assert code == 0
        captured = capsys.readouterr().out
        assert "indexed" in captured
        assert out.is_file()

    def test_missing_manifest_nonzero_exit(self, tmp_path, capsys):
        code = main(
            [
                "build-index",
                "--manifest", str(tmp_path / "nope.csv"),
                "--out", str(tmp_path / "idx.jsonl"),
            ]
        )
        assert code == 1
        assert "nope.csv" in capsys.readouterr().err

    def test_default_config_records_3072_rbc_bits(self, tmp_path, capsys):
        manifest = write_corpus(tmp_path / "data", count=2, size=16, test_every=0)
        out = tmp_path / "idx.jsonl"
        code = main(
            ["build-index", "--manifest", str(manifest), "--out", str(out),
             "--rbc-side", "192", "--rbc-angles", "16"]
        )
        assert code == 0
        assert "rbc 3072 bits" in capsys.readouterr().out
        index = load_index(out)
        assert all(e.rbc.length == 3072 for e in index.entries)


class TestQuery:
    def test_self_match_rank_one(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        first = index.entries[0]
        code = main(["query", "--index", str(index_path), "--image", first.path])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        rank_one = next(ln for ln in lines if ln.strip().startswith("1 "))
        assert first.image_id in rank_one

    def test_k2_limits_hits(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        code = main(
            ["query", "--index", str(index_path), "--image", index.entries[1].path,
             "--k2", "3", "--json"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["hits"]) == 3

    def test_json_shape(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        code = main(
            ["query", "--index", str(index_path), "--image", index.entries[0].path, "--json"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"query_id", "hits"}
        assert payload["hits"][0]["final_rank"] == 1
        assert {"image_id", "cnnc_distance", "rbc_distance", "final_rank"} == set(
            payload["hits"][0]
        )

    def test_missing_index_nonzero(self, tmp_path, capsys):
        code = main(
            ["query", "--index", str(tmp_path / "none.jsonl"), "--image", "x.pgm"]
        )
        assert code == 1


def _write_eval_corpus(root):
    """Four distinct train images; two test rows are file copies of train
    images but carry the first train image's label, so first-hit errors are
    hand-computable."""
    root.mkdir(parents=True, exist_ok=True)
    (root / "images").mkdir(exist_ok=True)
    rng = np.random.default_rng(5)
    train_labels = [
        "1121-127-700-500",
        "1121-127-700-400",  # B pos 1 differs
        "1121-120-700-500",  # D pos 3 differs
        "2121-127-700-500",  # T pos 1 differs
    ]
    for i in range(4):
        save_pgm(synthesize_image(i, rng, size=16), root / f"images/t{i}.pgm")
    shutil.copy(root / "images/t1.pgm", root / "images/q0.pgm")
    shutil.copy(root / "images/t2.pgm", root / "images/q1.pgm")
    rows = ["image_id,path,split,irma_code"]
    for i, label in enumerate(train_labels):
        rows.append(f"t{i},images/t{i}.pgm,train,{label}")
    rows.append(f"q0,images/q0.pgm,test,{train_labels[0]}")
    rows.append(f"q1,images/q1.pgm,test,{train_labels[0]}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n")
    return manifest


class TestEvaluate:
    def test_hand_computed_totals(self, tmp_path, capsys):
        manifest = _write_eval_corpus(tmp_path / "data")
        index_path = tmp_path / "idx.jsonl"
        assert main(
            ["build-index", "--manifest", str(manifest), "--out", str(index_path),
             "--rbc-side", "8", "--rbc-angles", "2", "--cnnc-dim", "16"]
        ) == 0
        report_path = tmp_path / "report.json"
        code = main(
            ["evaluate", "--index", str(index_path), "--manifest", str(manifest),
             "--report", str(report_path)]
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        # q0 -> t1 (B pos 1, cardinality 2): 1/2; q1 -> t2 (D pos 3): 1/2/3
        by_query = {row["query_id"]: row for row in report["per_query"]}
        assert by_query["q0"]["hit_id"] == "t1"
        assert by_query["q0"]["error"] == pytest.approx(0.5)
        assert by_query["q1"]["hit_id"] == "t2"
        assert by_query["q1"]["error"] == pytest.approx(1 / 6)
        assert report["total_error"] == pytest.approx(0.5 + 1 / 6)
        assert report["query_count"] == 2
        assert report["skipped_queries"] == 0

    def test_test_split_identical_to_train_scores_zero(self, tmp_path):
        root = tmp_path / "data"
        root.mkdir()
        (root / "images").mkdir()
        rng = np.random.default_rng(9)
        rows = ["image_id,path,split,irma_code"]
        for i in range(4):
            save_pgm(synthesize_image(i, rng, size=16), root / f"images/t{i}.pgm")
            shutil.copy(root / f"images/t{i}.pgm", root / f"images/q{i}.pgm")
            label = f"112{i}-127-700-500"
            rows.append(f"t{i},images/t{i}.pgm,train,{label}")
            rows.append(f"q{i},images/q{i}.pgm,test,{label}")
        manifest = root / "manifest.csv"
        manifest.write_text("\n".join(rows) + "\n")
        index_path = tmp_path / "idx.jsonl"
        assert main(
            ["build-index", "--manifest", str(manifest), "--out", str(index_path),
             "--rbc-side", "8", "--rbc-angles", "2", "--cnnc-dim", "16"]
        ) == 0
        report_path = tmp_path / "report.json"
        assert main(
            ["evaluate", "--index", str(index_path), "--manifest", str(manifest),
             "--report", str(report_path)]
        ) == 0
        report = json.loads(report_path.read_text())
        assert report["total_error"] == 0.0

    def test_unlabeled_test_rows_are_skipped(self, tmp_path):
        manifest = _write_eval_corpus(tmp_path / "data")
        text = manifest.read_text().splitlines()
        text.append("q2,images/q0.pgm,test,")  # no label
        # rewrite with a fresh id pointing at an existing file
        fixed = [text[0]] + [row for row in text[1:]]
        manifest.write_text("\n".join(fixed) + "\n")
        index_path = tmp_path / "idx.jsonl"
        assert main(
            ["build-index", "--manifest", str(manifest), "--out", str(index_path),
             "--rbc-side", "8", "--rbc-angles", "2", "--cnnc-dim", "16"]
        ) == 0
        report_path = tmp_path / "report.json"
        assert main(
            ["evaluate", "--index", str(index_path), "--manifest", str(manifest),
             "--report", str(report_path)]
        ) == 0
        report = json.loads(report_path.read_text())
        assert report["skipped_queries"] == 1
        assert report["query_count"] == 2

    def test_empty_test_split_nonzero_exit(self, tmp_path, capsys):
        manifest = write_corpus(tmp_path / "data", count=4, size=16, test_every=0)
        index_path = tmp_path / "idx.jsonl"
        assert main(
            ["build-index", "--manifest", str(manifest), "--out", str(index_path),
             "--rbc-side", "8", "--rbc-angles", "2", "--cnnc-dim", "16"]
        ) == 0
        code = main(
            ["evaluate", "--index", str(index_path), "--manifest", str(manifest),
             "--report", str(tmp_path / "r.json")]
        )
        assert code == 1
        assert "test" in capsys.readouterr().err


class TestLogging:
    def test_radbar_log_levels_accepted(self, corpus, monkeypatch):
        manifest, index_path = corpus
        index = load_index(index_path)
        for level in ("error", "warn", "info", "debug", "bogus"):
            monkeypatch.setenv("RADBAR_LOG", level)
            code = main(
                ["query", "--index", str(index_path), "--image", index.entries[0].path,
                 "--json"]
            )
            assert code == 0


class TestRoiMatch:
    def test_full_roi_against_self(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        entry = index.entries[0]
        img = load_grayscale(entry.path)
        code = main(
            ["roi-match", "--index", str(index_path), "--image", entry.path,
             "--roi", f"0,0,{img.width},{img.height}",
             "--targets", entry.image_id]
        )
        assert code == 0
        matches = json.loads(capsys.readouterr().out)
        assert matches == [
            {
                "target_image_id": entry.image_id,
                "x": 0, "y": 0, "w": img.width, "h": img.height,
                "score": matches[0]["score"],
            }
        ]
        assert matches[0]["score"] > 0

    def test_three_targets_in_argument_order(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        ids = [e.image_id for e in index.entries[:3]]
        code = main(
            ["roi-match", "--index", str(index_path), "--image", index.entries[0].path,
             "--roi", "2,2,8,8", "--targets", ",".join([ids[2], ids[0], ids[1]])]
        )
        assert code == 0
        matches = json.loads(capsys.readouterr().out)
        assert [m["target_image_id"] for m in matches] == [ids[2], ids[0], ids[1]]

    def test_malformed_roi_nonzero_exit(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        code = main(
            ["roi-match", "--index", str(index_path), "--image", index.entries[0].path,
             "--roi", "1,2,three,4", "--targets", index.entries[0].image_id]
        )
        assert code == 1
        assert "roi" in capsys.readouterr().err.lower()

    def test_unknown_target_nonzero_exit(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        code = main(
            ["roi-match", "--index", str(index_path), "--image", index.entries[0].path,
             "--roi", "0,0,4,4", "--targets", "ghost"]
        )
        assert code == 1
        assert "ghost" in capsys.readouterr().err

    def test_from_query_uses_hits(self, corpus, capsys):
        manifest, index_path = corpus
        index = load_index(index_path)
        entry = index.entries[0]
        code = main(
            ["roi-match", "--index", str(index_path), "--image", entry.path,
             "--roi", "0,0,8,8", "--from-query"]
        )
        assert code == 0
        matches = json.loads(capsys.readouterr().out)
        assert matches
        assert matches[0]["target_image_id"] == entry.image_id  # self-match first

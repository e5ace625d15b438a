"""End-to-end CLI tests: the full pipeline in a temporary workspace."""

import json

import pytest

from snipsearch.cli import main


def _write_posts(path):
    posts = [
        {
            "id": "p1",
            "title": "How to plot a histogram in matplotlib?",
            "score": 40,
            "tags": ["python", "matplotlib"],
            "answers": [
                {"score": 9, "code_blocks": [">>> import matplotlib.pyplot as plt\n>>> plt.hist(values)"]},
                {"score": 2, "code_blocks": ["plt.hist(values, bins=30)"]},
            ],
        },
        {
            "id": "p2",
            "title": "How do I merge two dataframes in pandas?",
            "score": 35,
            "tags": ["python", "pandas"],
            "answers": [{"score": 5, "code_blocks": ["combined = left.merge(right, on='key')"]}],
        },
        {
            "id": "p3",
            "title": "How to read a file line by line?",
            "score": 30,
            "tags": ["python"],
            "answers": [{"score": 3, "code_blocks": ["for line in open('f.txt'):\n    print(line)"]}],
        },
        {
            "id": "p4",
            "title": "Sorting a dictionary by value",
            "score": 25,
            "tags": ["python"],
            "answers": [{"score": 4, "code_blocks": ["sorted(d.items(), key=lambda kv: kv[1])"]}],
        },
        {
            "id": "q1",
            "title": "Plot histogram from list of numbers",
            "score": 10,
            "tags": ["python"],
            "answers": [],
        },
        {
            "id": "q2",
            "title": "Combine two pandas tables",
            "score": 9,
            "tags": ["python"],
            "answers": [],
        },
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for post in posts:
            fh.write(json.dumps(post) + "\n")


@pytest.fixture
def workspace(tmp_path):
    posts = tmp_path / "posts.jsonl"
    _write_posts(posts)
    edges = tmp_path / "edges.tsv"
    edges.write_text("q1\tp1\nq2\tp2\n")
    return tmp_path


def test_full_pipeline(workspace, capsys):
    ws = workspace
    assert (
        main(
            [
                "ingest",
                "--posts", str(ws / "posts.jsonl"),
                "--tags", "python,matplotlib",
                "--per-tag-cap", "10",
                "--out", str(ws / "snippets.jsonl"),
            ]
        )
        == 0
    )
    snippets = [json.loads(l) for l in (ws / "snippets.jsonl").read_text().splitlines()]
    assert len(snippets) >= 4
    assert all(not s["code"].startswith(">>>") for s in snippets)

    assert (
        main(
            [
                "mine-duplicates",
                "--edges", str(ws / "edges.tsv"),
                "--posts", str(ws / "posts.jsonl"),
                "--snippets", str(ws / "snippets.jsonl"),
                "--out-ground-truth", str(ws / "gt.jsonl"),
                "--out-pairs", str(ws / "pairs.jsonl"),
                "--negatives", "2",
            ]
        )
        == 0
    )
    gt = [json.loads(l) for l in (ws / "gt.jsonl").read_text().splitlines()]
    assert {g["query"] for g in gt} == {
        "Plot histogram from list of numbers",
        "Combine two pandas tables",
    }

    assert (
        main(
            [
                "build-corpus",
                "--snippets", str(ws / "snippets.jsonl"),
                "--mode", "ncs",
                "--out", str(ws / "corpus.txt"),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "train-embeddings",
                "--corpus", str(ws / "corpus.txt"),
                "--preset", "ncs",
                "--dim", "24",
                "--epochs", "8",
                "--buckets", "20000",
                "--seed", "3",
                "--out", str(ws / "ncs.vec"),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "build-index",
                "--snippets", str(ws / "snippets.jsonl"),
                "--code", f"ncs:{ws / 'ncs.vec'}",
                "--lambda-desc", "0",
                "--lambda-code", "1",
                "--out", str(ws / "idx.acsi"),
            ]
        )
        == 0
    )
    capsys.readouterr()

    assert (
        main(["search", "--index", str(ws / "idx.acsi"), "--query", "plot histogram", "--k", "3"])
        == 0
    )
    out = capsys.readouterr().out
    assert "p1#" in out

    assert (
        main(
            [
                "eval",
                "--index", str(ws / "idx.acsi"),
                "--queries", str(ws / "gt.jsonl"),
                "--json", str(ws / "report.jsonl"),
            ]
        )
        == 0
    )
    report = json.loads((ws / "report.jsonl").read_text().splitlines()[0])
    assert 0.0 <= report["mrr"] <= 1.0
    assert report["n_queries"] == 2


def test_unif_training_via_cli(workspace):
    ws = workspace
    main(["ingest", "--posts", str(ws / "posts.jsonl"), "--tags", "python",
          "--out", str(ws / "snippets.jsonl")])
    main(["build-corpus", "--snippets", str(ws / "snippets.jsonl"), "--out", str(ws / "c.txt")])
    main(["train-embeddings", "--corpus", str(ws / "c.txt"), "--preset", "ncs",
          "--dim", "16", "--epochs", "4", "--buckets", "20000", "--out", str(ws / "e.vec")])
    assert (
        main(
            [
                "train-unif",
                "--snippets", str(ws / "snippets.jsonl"),
                "--init", str(ws / "e.vec"),
                "--epochs", "2",
                "--batch-size", "2",
                "--out", str(ws / "unif.vec"),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "build-index",
                "--snippets", str(ws / "snippets.jsonl"),
                "--code", f"unif:{ws / 'unif.vec'}",
                "--lambda-desc", "0",
                "--lambda-code", "1",
                "--out", str(ws / "unif.acsi"),
            ]
        )
        == 0
    )
    assert main(["search", "--index", str(ws / "unif.acsi"), "--query", "merge tables"]) == 0


def test_finetune_via_cli(workspace):
    ws = workspace
    main(["ingest", "--posts", str(ws / "posts.jsonl"), "--tags", "python",
          "--out", str(ws / "snippets.jsonl")])
    main(["mine-duplicates", "--edges", str(ws / "edges.tsv"), "--posts", str(ws / "posts.jsonl"),
          "--snippets", str(ws / "snippets.jsonl"), "--out-pairs", str(ws / "pairs.jsonl"),
          "--negatives", "2"])
    main(["build-corpus", "--snippets", str(ws / "snippets.jsonl"), "--mode", "nbow",
          "--out", str(ws / "d.txt")])
    main(["train-embeddings", "--corpus", str(ws / "d.txt"), "--dim", "16", "--epochs", "20",
          "--min-count", "1", "--buckets", "20000", "--out", str(ws / "nbow.vec")])
    assert (
        main(
            [
                "finetune",
                "--pairs", str(ws / "pairs.jsonl"),
                "--table", str(ws / "nbow.vec"),
                "--epochs", "2",
                "--batch-size", "4",
                "--out-table", str(ws / "tuned.vec"),
                "--out-head", str(ws / "head.txt"),
            ]
        )
        == 0
    )
    head = (ws / "head.txt").read_text().split()
    assert len(head) == 2


class TestExitCodes:
    def test_unknown_subcommand_exits_1(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 1

    def test_unknown_flag_exits_1(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["search", "--no-such-flag", "x"])
        assert excinfo.value.code == 1

    def test_no_command_exits_1(self):
        assert main([]) == 1

    def test_missing_file_exits_2(self, tmp_path):
        code = main(["search", "--index", str(tmp_path / "missing.acsi"), "--query", "x"])
        assert code == 2

    def test_malformed_data_exits_2(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{not json\n")
        code = main(["build-corpus", "--snippets", str(bad), "--out", str(tmp_path / "o.txt")])
        assert code == 2


def test_global_seed_flows_into_subcommands(workspace):
    ws = workspace
    main(["ingest", "--posts", str(ws / "posts.jsonl"), "--tags", "python",
          "--out", str(ws / "s.jsonl")])
    main(["build-corpus", "--snippets", str(ws / "s.jsonl"), "--out", str(ws / "c.txt")])
    for run, args in (
        ("a", ["--seed", "99", "train-embeddings"]),
        ("b", ["train-embeddings", "--seed", "99"]),
        ("c", ["train-embeddings", "--seed", "7"]),
    ):
        assert (
            main(args + ["--corpus", str(ws / "c.txt"), "--dim", "8", "--epochs", "2",
                         "--min-count", "1", "--buckets", "5000",
                         "--out", str(ws / f"{run}.vec")])
            == 0
        )
    assert (ws / "a.vec").read_text() == (ws / "b.vec").read_text()
    assert (ws / "a.vec").read_text() != (ws / "c.vec").read_text()


def test_config_file_supplies_defaults(workspace):
    ws = workspace
    config = ws / "defaults.cfg"
    config.write_text("per-tag-cap=1\n")
    assert (
        main(
            [
                "--config", str(config),
                "ingest",
                "--posts", str(ws / "posts.jsonl"),
                "--tags", "python",
                "--out", str(ws / "capped.jsonl"),
            ]
        )
        == 0
    )
    snippets = (ws / "capped.jsonl").read_text().splitlines()
    assert len(snippets) == 1  # config capped the tag at one snippet

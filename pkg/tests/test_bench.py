"""Tests for the retrieval evaluation harness."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snipsearch.bench import (
    EvalReport,
    GroundTruthQuery,
    evaluate,
    load_ground_truth,
    overlap_histogram,
    reciprocal_rank,
    render_report_jsonl,
    render_text_table,
    run_benchmark,
    save_ground_truth,
)
from snipsearch.errors import DataError

from conftest import make_collection


def _oracle_metrics(cases, cutoff, ks):
    """Independent re-implementation of the metric definitions."""
    rr_sum = 0.0
    hits = {k: 0 for k in ks}
    for ranking, relevant in cases:
        rank = None
        for pos, doc in enumerate(ranking, start=1):
            if doc in relevant:
                rank = pos
                break
        if rank is not None and rank <= cutoff:
            rr_sum += 1.0 / rank
        for k in ks:
            if rank is not None and rank <= k:
                hits[k] += 1
    n = len(cases)
    return rr_sum / n, {k: hits[k] / n for k in ks}


class TestReciprocalRank:
    def test_first_rank(self):
        assert reciprocal_rank(["a", "b"], {"a"}, 10) == 1.0

    def test_third_rank(self):
        assert reciprocal_rank(["x", "y", "a"], {"a"}, 10) == pytest.approx(1 / 3)

    def test_cutoff_excludes_rank_eleven(self):
        ranking = [f"r{i}" for i in range(1, 12)]
        assert reciprocal_rank(ranking, {"r11"}, 10) == 0.0
        assert reciprocal_rank(ranking, {"r11"}, 11) == pytest.approx(1 / 11)

    def test_empty_relevant_set_rejected(self):
        with pytest.raises(ValueError):
            reciprocal_rank(["a"], set(), 10)


def _fixed_search(rankings):
    return lambda query: rankings[query]


class TestEvaluate:
    def test_hand_built_case(self):
        # first-relevant ranks [1, 2, 4, 11, none], cutoff 10
        pool = [f"d{i}" for i in range(1, 15)]
        rankings = {
            "q1": pool,
            "q2": pool,
            "q3": pool,
            "q4": pool,
            "q5": pool,
        }
        queries = [
            GroundTruthQuery("q1", frozenset({"d1"})),
            GroundTruthQuery("q2", frozenset({"d2"})),
            GroundTruthQuery("q3", frozenset({"d4"})),
            GroundTruthQuery("q4", frozenset({"d11"})),
            GroundTruthQuery("q5", frozenset({"nowhere"})),
        ]
        report = evaluate(_fixed_search(rankings), queries)
        assert report.mrr == pytest.approx(0.35, abs=1e-15)
        assert report.recall_at[3] == pytest.approx(0.4, abs=1e-15)
        assert report.recall_at[10] == pytest.approx(0.6, abs=1e-15)
        assert report.per_query == [
            ("q1", 1),
            ("q2", 2),
            ("q3", 4),
            ("q4", 11),
            ("q5", None),
        ]

    def test_perfect_retrieval(self):
        queries = [GroundTruthQuery(f"q{i}", frozenset({f"d{i}"})) for i in range(4)]
        report = evaluate(lambda q: [f"d{q[1:]}"], queries)
        assert report.mrr == 1.0
        assert report.recall_at[3] == 1.0 and report.recall_at[10] == 1.0

    def test_empty_query_list_rejected(self):
        with pytest.raises(ValueError):
            evaluate(lambda q: [], [])

    def test_unknown_relevant_id_names_query_and_id(self):
        queries = [GroundTruthQuery("find me", frozenset({"ghost"}))]
        with pytest.raises(DataError, match="find me.*ghost"):
            evaluate(lambda q: [], queries, collection_ids={"real"})

    @given(st.integers(min_value=0, max_value=100_000))
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force_oracle(self, seed):
        rng = random.Random(seed)
        n_docs = rng.randint(1, 50)
        docs = [f"d{i}" for i in range(n_docs)]
        cases = {}
        queries = []
        for qi in range(rng.randint(1, 8)):
            ranking = rng.sample(docs, rng.randint(0, n_docs))
            relevant = frozenset(rng.sample(docs, rng.randint(1, min(3, n_docs))))
            cases[f"q{qi}"] = (ranking, relevant)
            queries.append(GroundTruthQuery(f"q{qi}", relevant))
        report = evaluate(lambda q: cases[q][0], queries)
        mrr, recall = _oracle_metrics(list(cases.values()), 10, (3, 10))
        assert report.mrr == mrr
        assert report.recall_at == recall
        assert report.recall_at[3] <= report.recall_at[10]
        assert report.mrr <= report.recall_at[10]


class TestOverlapHistogram:
    def test_single_pair_half_overlap(self):
        coll = make_collection([("s1", "tell if tensorflow is using gpu", "x = 1")])
        queries = [GroundTruthQuery("check if tf uses gpu", frozenset({"s1"}))]
        hist = overlap_histogram(queries, coll)
        assert hist.counts[5] == 1 and sum(hist.counts) == 1
        assert hist.mean == pytest.approx(0.5)

    def test_identical_strings_last_bin(self):
        coll = make_collection([("s1", "plot histogram", "x = 1")])
        queries = [GroundTruthQuery("plot histogram", frozenset({"s1"}))]
        hist = overlap_histogram(queries, coll)
        assert hist.counts[9] == 1
        assert hist.mean == 1.0

    def test_empty_query_pairs_counted_separately(self):
        coll = make_collection([("s1", "plot histogram", "x = 1")])
        queries = [GroundTruthQuery("the a", frozenset({"s1"}))]
        hist = overlap_histogram(queries, coll)
        assert hist.pairs == 0 and hist.empty_query_pairs == 1
        assert hist.mean is None

    def test_counts_sum_to_included_pairs(self):
        coll = make_collection(
            [("s1", "plot histogram", "x = 1"), ("s2", "sort a list fast", "y = 2")]
        )
        queries = [
            GroundTruthQuery("plot histogram", frozenset({"s1", "s2"})),
            GroundTruthQuery("sorting lists", frozenset({"s2"})),
        ]
        hist = overlap_histogram(queries, coll)
        assert sum(hist.counts) == hist.pairs == 3


class TestRunBenchmark:
    def _setup(self):
        coll = make_collection([(f"d{i}", f"text {i}", f"x = {i}") for i in range(5)])
        queries = [
            GroundTruthQuery("q0", frozenset({"d0"})),
            GroundTruthQuery("q1", frozenset({"d1"})),
            GroundTruthQuery("q2", frozenset({"d2"})),
        ]
        ids = [f"d{i}" for i in range(5)]
        models = [
            ("good", lambda q: sorted(ids, key=lambda d: d != f"d{q[1:]}")),
            ("bad", lambda q: ids),
        ]
        return coll, queries, models

    def test_one_report_per_model(self):
        coll, queries, models = self._setup()
        reports = run_benchmark(models, queries, coll)
        assert [r.model for r in reports] == ["good", "bad"]
        assert all(r.n_queries == 3 for r in reports)

    def test_rerun_byte_identical(self):
        coll, queries, models = self._setup()
        first = render_report_jsonl(run_benchmark(models, queries, coll))
        second = render_report_jsonl(run_benchmark(models, queries, coll))
        assert first == second

    def test_text_table_one_decimal_percentages(self):
        coll, queries, models = self._setup()
        reports = run_benchmark(models, queries, coll)
        table = render_text_table(reports)
        assert "100.0" in table  # the perfect model
        machine = render_report_jsonl(reports)
        record = json.loads(machine.splitlines()[1])
        assert record["model"] == "bad"
        assert isinstance(record["mrr"], float)

    def test_requires_a_model(self):
        coll, queries, _ = self._setup()
        with pytest.raises(ValueError):
            run_benchmark([], queries, coll)


class TestGroundTruthFile:
    def test_roundtrip(self, tmp_path):
        queries = [
            GroundTruthQuery("plot things", frozenset({"a", "b"})),
            GroundTruthQuery("sort stuff", frozenset({"c"})),
        ]
        path = tmp_path / "gt.jsonl"
        save_ground_truth(queries, path)
        assert load_ground_truth(path) == queries

    def test_empty_relevant_rejected(self, tmp_path):
        path = tmp_path / "gt.jsonl"
        path.write_text('{"query": "q", "relevant_ids": []}\n')
        with pytest.raises(DataError):
            load_ground_truth(path)

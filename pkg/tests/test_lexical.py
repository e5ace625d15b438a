"""Tests for the BM25 baselines."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snipsearch.errors import DataError
from snipsearch.lexical import (
    B,
    EPSILON,
    K1,
    bm25_code_doc_tokens,
    bm25_code_query_tokens,
    bm25_descr_tokens,
    bm25_ranking,
    bm25_scores,
    build_bm25_index,
)


def _oracle_scores(docs, query, k1=K1, b=B, epsilon=EPSILON):
    """Direct per-document evaluation of the scoring formula."""
    n = len(docs)
    df = {}
    for doc in docs:
        for token in set(doc):
            df[token] = df.get(token, 0) + 1
    raw = {t: math.log((n - d + 0.5) / (d + 0.5) + 1.0) for t, d in df.items()}
    floor = epsilon * (sum(raw.values()) / len(raw))
    idf = {t: max(v, floor) for t, v in raw.items()}
    avg = sum(len(d) for d in docs) / n
    scores = []
    for doc in docs:
        score = 0.0
        for token in query:
            tf = doc.count(token)
            if tf == 0 or token not in idf:
                continue
            score += idf[token] * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len(doc) / avg))
        scores.append(score)
    return scores


class TestIdf:
    def test_df_one_of_three(self):
        index = build_bm25_index([["sort", "list"], ["open", "file"], ["plot", "data"]])
        assert index.idf["sort"] == pytest.approx(math.log(8 / 3), abs=1e-12)

    def test_token_in_all_docs_floored(self):
        docs = [["the", "sort"], ["the", "open"], ["the", "plot"]]
        index = build_bm25_index(docs)
        raw_common = math.log(0.5 / 3.5 + 1.0)
        raw_rare = math.log(8 / 3)
        mean = (raw_common + 3 * raw_rare) / 4
        floor = EPSILON * mean
        assert index.idf["the"] == pytest.approx(max(raw_common, floor), abs=1e-12)
        assert index.idf["the"] >= floor

    def test_default_shape_parameters(self):
        index = build_bm25_index([["a"]])
        assert (index.k1, index.b, index.epsilon) == (1.5, 0.75, 0.25)

    def test_all_empty_documents_error(self):
        with pytest.raises(DataError):
            build_bm25_index([[], []])


class TestScores:
    def test_no_matching_tokens_all_zero(self):
        index = build_bm25_index([["sort", "list"], ["open", "file"]])
        assert bm25_scores(index, ["zebra"]) == [0.0, 0.0]

    def test_len_equals_avg_len_score_is_idf(self):
        index = build_bm25_index([["sort", "list"]])
        scores = bm25_scores(index, ["sort"])
        assert scores[0] == pytest.approx(index.idf["sort"], abs=1e-12)

    def test_duplicate_query_token_counts_twice(self):
        index = build_bm25_index([["sort", "list"], ["open", "file"]])
        once = bm25_scores(index, ["sort"])
        twice = bm25_scores(index, ["sort", "sort"])
        assert twice[0] == pytest.approx(2 * once[0], abs=1e-12)

    def test_ranking_ties_by_doc_index(self):
        index = build_bm25_index([["sort"], ["sort"], ["open"]])
        assert bm25_ranking(index, ["sort"]) == [0, 1, 2]

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force_oracle(self, seed):
        rng = random.Random(seed)
        vocabulary = [f"w{i}" for i in range(12)]
        docs = [
            [rng.choice(vocabulary) for _ in range(rng.randint(1, 9))]
            for _ in range(rng.randint(1, 50))
        ]
        query = [rng.choice(vocabulary) for _ in range(rng.randint(1, 5))]
        index = build_bm25_index(docs)
        mine = bm25_scores(index, query)
        oracle = _oracle_scores(docs, query)
        assert mine == pytest.approx(oracle, abs=1e-12)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_scores_non_negative(self, seed):
        rng = random.Random(seed)
        vocabulary = [f"w{i}" for i in range(6)]
        docs = [
            [rng.choice(vocabulary) for _ in range(rng.randint(1, 6))]
            for _ in range(rng.randint(1, 25))
        ]
        index = build_bm25_index(docs)
        query = [rng.choice(vocabulary) for _ in range(3)]
        assert all(s >= 0 for s in bm25_scores(index, query))

    def test_irrelevant_document_keeps_tf_component_order(self):
        # Doc 0 dominates doc 1 dominates doc 2 in (tf up, length down) terms.
        docs = [
            ["sort", "sort", "x"],
            ["sort", "y", "z"],
            ["sort", "a", "b", "c", "d"],
        ]
        query = ["sort"]
        index_before = build_bm25_index(docs)
        before = bm25_scores(index_before, query)
        components_before = [s / index_before.idf["sort"] for s in before]
        index_after = build_bm25_index(docs + [["unrelated", "tokens", "here"]])
        after = bm25_scores(index_after, query)[:3]
        components_after = [s / index_after.idf["sort"] for s in after]
        assert sorted(range(3), key=lambda i: -components_before[i]) == sorted(
            range(3), key=lambda i: -components_after[i]
        )


class TestPreprocessing:
    def test_code_tokens_are_lemmatized(self):
        tokens = bm25_code_doc_tokens("read_files(paths)  # loading frames")
        assert tokens == ["read", "file", "path", "load", "frame"]

    def test_query_tokens_ncs_plus_lemma(self):
        # stopword removed, remaining tokens stemmed
        assert bm25_code_query_tokens("reading the files") == ["read", "file"]

    def test_descr_tokens_full_pipeline(self):
        assert bm25_descr_tokens("How to plot a histogram?") == ["plot", "histogram"]

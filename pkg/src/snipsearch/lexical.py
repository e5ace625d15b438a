"""Okapi BM25 baselines over code tokens and description tokens."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from .corpus import NCS_QUERY_CONFIG, tokenize_code, tokenize_natural
from .errors import DataError
from .stemmer import stem

K1 = 1.5
B = 0.75
EPSILON = 0.25


@dataclass
class Bm25Index:
    """Inverted index with per-token idf and document length statistics.

    idf(t) = ln((N - df + 0.5)/(df + 0.5) + 1), floored at
    epsilon * (mean idf) so no term can score negatively or vanish.
    """

    postings: dict[str, list[tuple[int, int]]]  # token -> [(doc index, tf)]
    doc_lengths: list[int]
    avg_len: float
    k1: float
    b: float
    epsilon: float
    idf: dict[str, float]

    @property
    def n_docs(self) -> int:
        return len(self.doc_lengths)


def build_bm25_index(
    docs: Sequence[Sequence[str]],
    k1: float = K1,
    b: float = B,
    epsilon: float = EPSILON,
) -> Bm25Index:
    """Index tokenized documents; document order is the scoring order."""
    if not docs:
        raise ValueError("docs must be non-empty")
    doc_lengths = [len(d) for d in docs]
    total = sum(doc_lengths)
    if total == 0:
        raise DataError("all documents are empty")
    n = len(docs)
    postings: dict[str, list[tuple[int, int]]] = {}
    for doc_idx, doc in enumerate(docs):
        for token, tf in sorted(Counter(doc).items()):
            postings.setdefault(token, []).append((doc_idx, tf))

    raw = {
        token: math.log((n - len(plist) + 0.5) / (len(plist) + 0.5) + 1.0)
        for token, plist in postings.items()
    }
    floor = epsilon * (sum(raw.values()) / len(raw))
    idf = {token: max(value, floor) for token, value in raw.items()}
    return Bm25Index(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_len=total / n,
        k1=k1,
        b=b,
        epsilon=epsilon,
        idf=idf,
    )


def bm25_scores(index: Bm25Index, query_tokens: Sequence[str]) -> list[float]:
    """Per-document BM25 scores; duplicate query tokens count per occurrence."""
    scores = [0.0] * index.n_docs
    k1, b, avg = index.k1, index.b, index.avg_len
    for token in query_tokens:
        plist = index.postings.get(token)
        if not plist:
            continue
        token_idf = index.idf[token]
        for doc_idx, tf in plist:
            denom = tf + k1 * (1.0 - b + b * index.doc_lengths[doc_idx] / avg)
            scores[doc_idx] += token_idf * tf * (k1 + 1.0) / denom
    return scores


def bm25_ranking(index: Bm25Index, query_tokens: Sequence[str]) -> list[int]:
    """Document indices by descending score, ties by ascending index."""
    scores = bm25_scores(index, query_tokens)
    return sorted(range(index.n_docs), key=lambda i: (-scores[i], i))


# Preprocessing for the two baseline variants: the code-side baseline uses
# the multimodal code/query tokenization with every token lemmatized; the
# description-side baseline uses plain natural-language tokenization.


def bm25_code_doc_tokens(code: str) -> list[str]:
    return [stem(t) for t in tokenize_code(code).all_tokens()]


def bm25_code_query_tokens(query: str) -> list[str]:
    return [stem(t) for t in tokenize_natural(query, NCS_QUERY_CONFIG)]


def bm25_descr_tokens(text: str) -> list[str]:
    return tokenize_natural(text)

"""Shared test fixtures and deterministic helper encoders."""

import zlib
from dataclasses import dataclass

import numpy as np
import pytest

from snipsearch.corpus import AnnotatedSnippet, SnippetCollection
from snipsearch.embed import EmbeddingTable


@dataclass
class HashEncoder:
    """Deterministic pseudo-random unit-scale encoder keyed by text."""

    _dim: int
    kind: str = "hash"
    salt: int = 0

    @property
    def dim(self) -> int:
        return self._dim

    def encode(self, text: str) -> np.ndarray:
        seed = zlib.crc32(f"{self.salt}:{text}".encode("utf-8"))
        rng = np.random.default_rng(seed)
        return rng.normal(size=self._dim)

    def encode_document(self, text: str) -> np.ndarray:
        return self.encode(text)

    def encode_query(self, text: str) -> np.ndarray:
        return self.encode(text)


def make_table(vectors: dict[str, list[float]]) -> EmbeddingTable:
    """Embedding table with exactly the given vectors and no subwords."""
    vocab = {t: i for i, t in enumerate(vectors)}
    dim = len(next(iter(vectors.values())))
    token_vectors = np.zeros((len(vocab), dim), dtype=np.float32)
    for token, idx in vocab.items():
        token_vectors[idx] = np.asarray(vectors[token], dtype=np.float32)
    return EmbeddingTable(
        dim=dim,
        vocab=vocab,
        token_vectors=token_vectors,
        bucket_vectors=np.zeros((0, dim), dtype=np.float32),
        bucket_index={},
        ngram_range=(3, 6),
        bucket_count=1000,
        composed=token_vectors.copy(),
    )


def make_collection(rows: list[tuple[str, str, str]], name: str = "test") -> SnippetCollection:
    """Collection from (id, description, code) rows."""
    return SnippetCollection(
        snippets=[AnnotatedSnippet(id=i, description=d, code=c) for i, d, c in rows],
        name=name,
    )


@pytest.fixture
def hash_encoder():
    return HashEncoder(_dim=16)

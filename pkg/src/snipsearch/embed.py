"""Subword skip-gram embedding training, IDF tables, and the text format.

The trainer reimplements the continuous skip-gram model with negative
sampling and hashed character n-gram subwords. Training is single-threaded
and deterministic: the same corpus, spec, and seed produce byte-identical
tables. Bucket vectors are kept sparsely (only hash buckets reachable from
the training vocabulary get a row), which also defines the "known n-gram"
set used for out-of-vocabulary lookups.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _sgns
from .corpus import SnippetCollection, tokenize_code
from .errors import DataError

logger = logging.getLogger(__name__)

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619
_U32 = 0xFFFFFFFF


def fnv1a_32(data: bytes) -> int:
    """32-bit FNV-1a hash; pins the n-gram bucket assignment."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U32
    return h


def token_ngrams(token: str, min_n: int, max_n: int) -> list[str]:
    """Character n-grams of the token wrapped in boundary markers < >."""
    wrapped = f"<{token}>"
    out: list[str] = []
    for n in range(min_n, max_n + 1):
        for i in range(len(wrapped) - n + 1):
            out.append(wrapped[i : i + n])
    return out


def ngram_buckets(token: str, min_n: int, max_n: int, bucket_count: int) -> list[int]:
    """Hash bucket per n-gram occurrence (duplicates kept)."""
    return [
        fnv1a_32(g.encode("utf-8")) % bucket_count for g in token_ngrams(token, min_n, max_n)
    ]


@dataclass(frozen=True)
class TrainSpec:
    """Skip-gram training hyper-parameters."""

    dim: int = 100
    epochs: int = 5
    window: int = 5
    negatives: int = 5
    learning_rate: float = 0.05
    min_count: int = 5
    seed: int = 1
    ngram_range: tuple[int, int] = (3, 6)
    bucket_count: int = 2_000_000

    def __post_init__(self) -> None:
        if min(self.dim, self.epochs, self.negatives, self.min_count, self.bucket_count) < 1:
            raise ValueError("dim, epochs, negatives, min_count, bucket_count must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (1 <= self.ngram_range[0] <= self.ngram_range[1]):
            raise ValueError("bad ngram_range")


# Description-embedding preset: library defaults except for the epoch count.
NBOW_TRAIN_SPEC = TrainSpec(epochs=300)
# Multimodal preset: long window, no frequency cut.
NCS_TRAIN_SPEC = TrainSpec(epochs=30, window=20, min_count=1)


@dataclass
class EmbeddingTable:
    """Token vectors plus hashed subword bucket vectors.

    ``token_vectors`` holds the raw per-token input vectors; ``composed``
    caches token vector + n-gram vectors per vocabulary token (precomposed
    at the end of training). ``bucket_vectors`` has one row per hash bucket
    seen during training, indexed through ``bucket_index``.
    """

    dim: int
    vocab: dict[str, int]
    token_vectors: np.ndarray
    bucket_vectors: np.ndarray
    bucket_index: dict[int, int]
    ngram_range: tuple[int, int]
    bucket_count: int
    composed: np.ndarray

    def tokens(self) -> list[str]:
        ordered = [""] * len(self.vocab)
        for token, idx in self.vocab.items():
            ordered[idx] = token
        return ordered

    def lookup(self, token: str) -> np.ndarray:
        return self.lookup_flagged(token)[0]

    def lookup_flagged(self, token: str) -> tuple[np.ndarray, bool]:
        """Vector for a token plus an out-of-vocabulary flag.

        In-vocabulary tokens return their precomposed vector. Unknown
        tokens sum the bucket vectors of their known n-grams; the flag is
        True only when the token has no known n-grams at all (the returned
        vector is then zero).
        """
        idx = self.vocab.get(token)
        if idx is not None:
            return self.composed[idx].copy(), False
        lo, hi = self.ngram_range
        rows = [
            self.bucket_index[b]
            for b in ngram_buckets(token, lo, hi, self.bucket_count)
            if b in self.bucket_index
        ]
        if not rows:
            return np.zeros(self.dim, dtype=np.float32), True
        return self.bucket_vectors[rows].sum(axis=0), False


def lookup(table: EmbeddingTable, token: str) -> np.ndarray:
    """Composed vector for a token (module-level alias of the method)."""
    return table.lookup(token)


@dataclass
class IdfTable:
    """Smoothed inverse document frequencies over code tokens."""

    doc_count: int
    df: dict[str, int]
    values: dict[str, float]

    def value(self, token: str) -> float:
        default = float(np.log(self.doc_count + 1.0) + 1.0)
        return self.values.get(token, default)


def build_training_corpus(
    pairs: Iterable[tuple[Sequence[str], Sequence[str]]], augment: bool
) -> list[str]:
    """Token lines for embedding training from (description, code) pairs.

    Without augmentation each pair yields one line, description followed by
    code tokens. With augmentation two more orders are emitted per pair:
    description inserted in the middle of the code tokens, and description
    appended after them. Pairs with an empty side are skipped.
    """
    lines: list[str] = []
    skipped = 0
    for desc_tokens, code_tokens in pairs:
        desc = list(desc_tokens)
        code = list(code_tokens)
        if not desc or not code:
            skipped += 1
            continue
        lines.append(" ".join(desc + code))
        if augment:
            mid = len(code) // 2
            lines.append(" ".join(code[:mid] + desc + code[mid:]))
            lines.append(" ".join(code + desc))
    if skipped:
        logger.info("skipped %d pairs with an empty side", skipped)
    return lines


def train_embeddings(corpus: Sequence[str], spec: TrainSpec) -> EmbeddingTable:
    """Train a subword skip-gram table over whitespace-tokenized lines."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    lines = [line.split() for line in corpus]
    counts: Counter[str] = Counter(t for line in lines for t in line)
    vocab_items = sorted(
        ((t, c) for t, c in counts.items() if c >= spec.min_count),
        key=lambda item: (-item[1], item[0]),
    )
    if not vocab_items:
        raise DataError("empty vocabulary after min_count filtering")
    vocab = {token: i for i, (token, _) in enumerate(vocab_items)}
    v_size = len(vocab)

    flat: list[int] = []
    ptr = [0]
    for line in lines:
        flat.extend(vocab[t] for t in line if t in vocab)
        ptr.append(len(flat))
    tokens_arr = np.asarray(flat, dtype=np.int32)
    line_ptr = np.asarray(ptr, dtype=np.int64)

    lo, hi = spec.ngram_range
    per_token_buckets = [
        ngram_buckets(token, lo, hi, spec.bucket_count) for token, _ in vocab_items
    ]
    seen_buckets = sorted({b for buckets in per_token_buckets for b in buckets})
    bucket_index = {b: i for i, b in enumerate(seen_buckets)}
    row_flat: list[int] = []
    row_ptr = [0]
    for idx, buckets in enumerate(per_token_buckets):
        row_flat.append(idx)  # the token row itself comes first
        row_flat.extend(v_size + bucket_index[b] for b in buckets)
        row_ptr.append(len(row_flat))
    row_flat_arr = np.asarray(row_flat, dtype=np.int64)
    row_ptr_arr = np.asarray(row_ptr, dtype=np.int64)

    neg_table = _negative_table(np.asarray([c for _, c in vocab_items], dtype=np.float64))

    rng = np.random.default_rng(spec.seed)
    in_mat = (rng.random((v_size + len(seen_buckets), spec.dim), dtype=np.float32) - 0.5) / spec.dim
    out_mat = np.zeros((v_size, spec.dim), dtype=np.float32)

    total_pairs = _sgns.count_pairs(
        tokens_arr, line_ptr, spec.epochs, spec.window, np.uint64(spec.seed)
    )
    if total_pairs > 0:
        _sgns.train(
            tokens_arr,
            line_ptr,
            row_flat_arr,
            row_ptr_arr,
            neg_table,
            in_mat,
            out_mat,
            spec.epochs,
            spec.window,
            spec.negatives,
            float(spec.learning_rate),
            np.uint64(spec.seed),
            total_pairs,
        )

    token_vectors = in_mat[:v_size].copy()
    bucket_vectors = in_mat[v_size:].copy()
    composed = token_vectors.copy()
    for idx, buckets in enumerate(per_token_buckets):
        for b in buckets:
            composed[idx] += bucket_vectors[bucket_index[b]]
    return EmbeddingTable(
        dim=spec.dim,
        vocab=vocab,
        token_vectors=token_vectors,
        bucket_vectors=bucket_vectors,
        bucket_index=bucket_index,
        ngram_range=spec.ngram_range,
        bucket_count=spec.bucket_count,
        composed=composed,
    )


def _negative_table(counts: np.ndarray, table_size: int = 1_000_000) -> np.ndarray:
    """Unigram^0.75 sampling table (word index repeated ∝ its probability)."""
    probs = counts**0.75
    probs /= probs.sum()
    boundaries = np.minimum(np.ceil(np.cumsum(probs) * table_size), table_size).astype(np.int64)
    table = np.empty(table_size, dtype=np.int32)
    start = 0
    for idx, end in enumerate(boundaries):
        if end > start:
            table[start:end] = idx
            start = end
    if start < table_size:
        table[start:] = len(counts) - 1
    return table


def compute_idf(collection: SnippetCollection) -> IdfTable:
    """IDF over snippet code tokens: idf = ln((N+1)/(df+1)) + 1."""
    if len(collection) == 0:
        raise ValueError("collection must be non-empty")
    df: Counter[str] = Counter()
    for snippet in collection:
        df.update(set(tokenize_code(snippet.code).all_tokens()))
    n = len(collection)
    values = {t: float(np.log((n + 1.0) / (d + 1.0)) + 1.0) for t, d in df.items()}
    return IdfTable(doc_count=n, df=dict(df), values=values)


# ---------------------------------------------------------------------------
# Embedding text format


def save_text_vectors(rows: list[tuple[str, np.ndarray]], dim: int, path: str | Path) -> None:
    """Write "<count> <dim>" then one "key v1 .. vdim" row per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{len(rows)} {dim}\n")
        for key, vec in rows:
            floats = " ".join(repr(float(x)) for x in vec)
            handle.write(f"{key} {floats}\n")


def load_text_vectors(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Read the text vector format; keys may contain spaces.

    Each row is parsed from the right: the trailing ``dim`` fields are the
    vector, everything before is the key.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: bad header, expected '<count> <dim>'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise DataError(f"{path}: bad header, expected '<count> <dim>'") from exc
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.rsplit(" ", dim)
            if len(parts) != dim + 1 or not parts[0]:
                raise DataError(f"{path}:{lineno}: expected a key and {dim} floats")
            try:
                vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad float field: {exc}") from exc
            vectors[parts[0]] = vec
    if len(vectors) != count:
        raise DataError(f"{path}: header promises {count} rows, found {len(vectors)}")
    return vectors, dim


def save_table(table: EmbeddingTable, path: str | Path) -> None:
    """Persist a table: token vectors, bucket sidecar, subword metadata.

    ``<path>`` gets the raw token vectors, ``<path>.buckets`` the bucket
    vectors keyed by bucket index, ``<path>.meta.json`` the n-gram range
    and hash-space size.
    """
    path = Path(path)
    ordered = table.tokens()
    save_text_vectors(
        [(t, table.token_vectors[table.vocab[t]]) for t in ordered], table.dim, path
    )
    bucket_rows = sorted(table.bucket_index.items())
    save_text_vectors(
        [(str(b), table.bucket_vectors[row]) for b, row in bucket_rows],
        table.dim,
        path.with_name(path.name + ".buckets"),
    )
    meta = {
        "ngram_min": table.ngram_range[0],
        "ngram_max": table.ngram_range[1],
        "bucket_count": table.bucket_count,
    }
    path.with_name(path.name + ".meta.json").write_text(
        json.dumps(meta) + "\n", encoding="utf-8"
    )


def load_table(path: str | Path) -> EmbeddingTable:
    """Load a table written by :func:`save_table`; recomposes vectors."""
    path = Path(path)
    token_map, dim = load_text_vectors(path)
    return assemble_table(token_map, dim, path)


def assemble_table(
    token_map: dict[str, np.ndarray], dim: int, path: Path
) -> EmbeddingTable:
    """Build an EmbeddingTable from parsed token rows plus sidecar files."""
    vocab = {t: i for i, t in enumerate(token_map)}
    token_vectors = np.zeros((len(vocab), dim), dtype=np.float32)
    for t, i in vocab.items():
        token_vectors[i] = token_map[t]

    buckets_path = path.with_name(path.name + ".buckets")
    meta_path = path.with_name(path.name + ".meta.json")
    bucket_index: dict[int, int] = {}
    bucket_vectors = np.zeros((0, dim), dtype=np.float32)
    ngram_range = (3, 6)
    bucket_count = 2_000_000
    if buckets_path.exists() and meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        ngram_range = (int(meta["ngram_min"]), int(meta["ngram_max"]))
        bucket_count = int(meta["bucket_count"])
        bucket_map, bdim = load_text_vectors(buckets_path)
        if bdim != dim:
            raise DataError(f"{buckets_path}: bucket dim {bdim} != table dim {dim}")
        bucket_vectors = np.zeros((len(bucket_map), dim), dtype=np.float32)
        for row, (key, vec) in enumerate(sorted(bucket_map.items(), key=lambda kv: int(kv[0]))):
            bucket_index[int(key)] = row
            bucket_vectors[row] = vec

    composed = token_vectors.copy()
    lo, hi = ngram_range
    for t, i in vocab.items():
        for b in ngram_buckets(t, lo, hi, bucket_count):
            row = bucket_index.get(b)
            if row is not None:
                composed[i] += bucket_vectors[row]
    return EmbeddingTable(
        dim=dim,
        vocab=vocab,
        token_vectors=token_vectors,
        bucket_vectors=bucket_vectors,
        bucket_index=bucket_index,
        ngram_range=ngram_range,
        bucket_count=bucket_count,
        composed=composed,
    )


def save_idf(idf: IdfTable, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps({"doc_count": idf.doc_count, "df": idf.df}) + "\n", encoding="utf-8"
    )


def load_idf(path: str | Path) -> IdfTable:
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
        n = int(record["doc_count"])
        df = {str(t): int(d) for t, d in record["df"].items()}
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad idf table: {exc}") from exc
    values = {t: float(np.log((n + 1.0) / (d + 1.0)) + 1.0) for t, d in df.items()}
    return IdfTable(doc_count=n, df=df, values=values)

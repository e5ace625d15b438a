"""Query, description, and code encoders over a shared vector space.

Four encoder families: NBOW (bag-of-words sum over description embeddings),
NCS query/code (multimodal table, IDF-weighted on the code side), UNIF code
(attention-pooled token embeddings, trained with a cosine margin loss), and
an import adapter for externally computed sentence embeddings. Every
encoder maps raw text to a fixed-dimension float64 vector and is
deterministic; empty or fully unknown input encodes to the zero vector so
callers can detect and record it.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .corpus import NCS_QUERY_CONFIG, NlTokenConfig, tokenize_code, tokenize_natural
from .embed import (
    EmbeddingTable,
    IdfTable,
    assemble_table,
    load_text_vectors,
    ngram_buckets,
    save_table,
)
from .errors import DataError
from .optim import Adam

logger = logging.getLogger(__name__)

ATTENTION_KEY = "<attention>"


@runtime_checkable
class Encoder(Protocol):
    """Maps raw text to a fixed-dimension vector, deterministic per kind.

    Snippets and queries may take different paths through the same model
    (the multimodal code encoder lexes snippet code but treats the query
    as natural language), hence the two methods; symmetric encoders alias
    both to one implementation.
    """

    kind: str

    @property
    def dim(self) -> int: ...

    def encode_document(self, text: str) -> np.ndarray: ...

    def encode_query(self, text: str) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# Token-level encoding operations


def encode_nbow(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Sum of token vectors; the empty bag is the zero vector."""
    out = np.zeros(table.dim, dtype=np.float64)
    for token in tokens:
        out += table.lookup(token)
    return out


def encode_ncs_query(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Query-side multimodal sum (same arithmetic as NBOW over e2)."""
    return encode_nbow(tokens, table)


def encode_ncs_code(
    code_tokens: Sequence[str], table: EmbeddingTable, idf: IdfTable
) -> np.ndarray:
    """IDF-weighted sum of code token vectors; one term per occurrence."""
    out = np.zeros(table.dim, dtype=np.float64)
    for token in code_tokens:
        out += idf.value(token) * table.lookup(token).astype(np.float64)
    return out


@dataclass
class UnifParams:
    """Attention-pooled code encoder parameters: token table plus a."""

    token_table: EmbeddingTable
    attention: np.ndarray

    def __post_init__(self) -> None:
        if self.attention.shape != (self.token_table.dim,):
            raise ValueError("attention vector length must equal the table dim")


def encode_unif_code(code_tokens: Sequence[str], params: UnifParams) -> np.ndarray:
    """Softmax-attention weighted sum of code token vectors."""
    if not code_tokens:
        raise ValueError("encode_unif_code requires a non-empty token list")
    vectors = np.stack(
        [params.token_table.lookup(t).astype(np.float64) for t in code_tokens]
    )
    weights = attention_weights(vectors, params.attention.astype(np.float64))
    return weights @ vectors


def attention_weights(vectors: np.ndarray, attention: np.ndarray) -> np.ndarray:
    """Softmax over token-attention dot products, max-subtracted."""
    logits = vectors @ attention
    logits = logits - logits.max()
    exp = np.exp(logits)
    return exp / exp.sum()


# ---------------------------------------------------------------------------
# Text-level encoder objects (what the index and service consume)


@dataclass
class NbowEncoder:
    """Description/query encoder: NL preprocessing + bag-of-words sum."""

    table: EmbeddingTable
    config: NlTokenConfig = field(default_factory=NlTokenConfig)
    kind: str = "nbow"

    @property
    def dim(self) -> int:
        return self.table.dim

    def encode(self, text: str) -> np.ndarray:
        return encode_nbow(tokenize_natural(text, self.config), self.table)

    encode_document = encode
    encode_query = encode


@dataclass
class NcsEncoder:
    """Multimodal code model over the shared table e2.

    Snippet code is lexed and IDF-weighted; queries are tokenized as
    natural language (stopword removal, no lemmatization) and summed
    unweighted.
    """

    table: EmbeddingTable
    idf: IdfTable
    kind: str = "ncs"

    @property
    def dim(self) -> int:
        return self.table.dim

    def encode_document(self, text: str) -> np.ndarray:
        return encode_ncs_code(tokenize_code(text).all_tokens(), self.table, self.idf)

    def encode_query(self, text: str) -> np.ndarray:
        return encode_ncs_query(tokenize_natural(text, NCS_QUERY_CONFIG), self.table)


@dataclass
class UnifEncoder:
    """Attention-pooled code model over the fine-tuned table e3.

    Snippet code uses softmax attention pooling (zero vector for empty
    code); queries are encoded as an unweighted sum with the same query
    preprocessing as the multimodal model.
    """

    params: UnifParams
    kind: str = "unif"

    @property
    def dim(self) -> int:
        return self.params.token_table.dim

    def encode_document(self, text: str) -> np.ndarray:
        tokens = tokenize_code(text).all_tokens()
        if not tokens:
            return np.zeros(self.dim, dtype=np.float64)
        return encode_unif_code(tokens, self.params)

    def encode_query(self, text: str) -> np.ndarray:
        tokens = tokenize_natural(text, NCS_QUERY_CONFIG)
        return encode_nbow(tokens, self.params.token_table)


@dataclass
class ExternalEncoder:
    """Encoder backed by imported sentence vectors keyed by exact strings."""

    vectors: dict[str, np.ndarray]
    _dim: int
    kind: str = "external"

    @property
    def dim(self) -> int:
        return self._dim

    def encode(self, text: str) -> np.ndarray:
        try:
            return self.vectors[text].astype(np.float64)
        except KeyError:
            raise DataError(f"no imported embedding for input {text!r}") from None

    encode_document = encode
    encode_query = encode


def import_external_embeddings(path: str | Path) -> ExternalEncoder:
    """Load an encoder from a text-format file keyed by exact input strings."""
    vectors, dim = load_text_vectors(path)
    return ExternalEncoder(vectors=vectors, _dim=dim)


# ---------------------------------------------------------------------------
# UNIF margin training


@dataclass(frozen=True)
class MarginSpec:
    """Hinge-margin training hyper-parameters for UNIF."""

    margin: float = 0.1
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-4
    negatives_per_positive: int = 1
    seed: int = 0
    eval_every: int = 1  # epochs between validation evaluations

    def __post_init__(self) -> None:
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if min(self.epochs, self.batch_size, self.eval_every) < 1:
            raise ValueError("epochs, batch_size, eval_every must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")


@dataclass(frozen=True)
class _BagRef:
    """A tokenized text resolved against a vocabulary.

    ``index_of`` holds the vocab row per token position (-1 for unknown
    tokens); ``const`` holds the frozen subword contribution per position.
    Only vocab rows receive gradients during fine-tuning.
    """

    index_of: tuple[int, ...]
    const: np.ndarray  # (n_tokens, dim) float64


def _resolve_bag(tokens: Sequence[str], table: EmbeddingTable) -> _BagRef:
    index_of = []
    const = np.zeros((len(tokens), table.dim), dtype=np.float64)
    lo, hi = table.ngram_range
    for pos, token in enumerate(tokens):
        idx = table.vocab.get(token, -1)
        index_of.append(idx)
        if idx < 0:
            vec, _ = table.lookup_flagged(token)
            const[pos] = vec
        else:
            for b in ngram_buckets(token, lo, hi, table.bucket_count):
                row = table.bucket_index.get(b)
                if row is not None:
                    const[pos] += table.bucket_vectors[row]
    return _BagRef(index_of=tuple(index_of), const=const)


def _bag_vectors(bag: _BagRef, token_vecs: np.ndarray) -> np.ndarray:
    """Per-position vectors: trainable token row plus frozen subword part."""
    out = bag.const.copy()
    for pos, idx in enumerate(bag.index_of):
        if idx >= 0:
            out[pos] += token_vecs[idx]
    return out


def _cosine_with_grads(u: np.ndarray, v: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    c = float(u @ v) / (nu * nv)
    du = v / (nu * nv) - c * u / (nu * nu)
    dv = u / (nu * nv) - c * v / (nv * nv)
    return c, du, dv


def unif_batch_loss_and_grads(
    token_vecs: np.ndarray,
    attention: np.ndarray,
    triplets: Sequence[tuple[_BagRef, _BagRef, _BagRef]],
    margin: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean hinge loss max(0, margin - cos(d,c+) + cos(d,c-)) and gradients.

    Descriptions are encoded as bag-of-words sums over the same trainable
    table; code texts with the softmax attention pooling. Gradients flow to
    the vocabulary token vectors and the attention vector.
    """
    grad_vecs = np.zeros_like(token_vecs)
    grad_att = np.zeros_like(attention)
    total = 0.0
    for desc, pos_code, neg_code in triplets:
        d_vecs = _bag_vectors(desc, token_vecs)
        d = d_vecs.sum(axis=0)
        c_pos, w_pos, v_pos = _attended(pos_code, token_vecs, attention)
        c_neg, w_neg, v_neg = _attended(neg_code, token_vecs, attention)
        if not d.any() or not c_pos.any() or not c_neg.any():
            continue  # degenerate zero vector, cosine undefined
        cos_p, d_d_p, d_cp = _cosine_with_grads(d, c_pos)
        cos_n, d_d_n, d_cn = _cosine_with_grads(d, c_neg)
        hinge = margin - cos_p + cos_n
        total += max(0.0, hinge)
        if hinge <= 0.0:
            continue
        g_d = -d_d_p + d_d_n
        for idx in desc.index_of:
            if idx >= 0:
                grad_vecs[idx] += g_d
        _backprop_attention(pos_code, w_pos, v_pos, -d_cp, token_vecs, grad_vecs, grad_att, attention)
        _backprop_attention(neg_code, w_neg, v_neg, d_cn, token_vecs, grad_vecs, grad_att, attention)
    n = len(triplets)
    if n:
        total /= n
        grad_vecs /= n
        grad_att /= n
    return total, grad_vecs, grad_att


def _attended(
    bag: _BagRef, token_vecs: np.ndarray, attention: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vectors = _bag_vectors(bag, token_vecs)
    weights = attention_weights(vectors, attention)
    return weights @ vectors, weights, vectors


def _backprop_attention(
    bag: _BagRef,
    weights: np.ndarray,
    vectors: np.ndarray,
    g_c: np.ndarray,
    token_vecs: np.ndarray,
    grad_vecs: np.ndarray,
    grad_att: np.ndarray,
    attention: np.ndarray,
) -> None:
    scores = vectors @ g_c  # s_k = g_c . v_k
    weighted_mean = float(weights @ scores)
    t = weights * (scores - weighted_mean)  # dL/dz_i
    grad_att += t @ vectors
    for pos, idx in enumerate(bag.index_of):
        if idx >= 0:
            grad_vecs[idx] += weights[pos] * g_c + t[pos] * attention


def _retable(init: EmbeddingTable, token_vecs: np.ndarray) -> EmbeddingTable:
    """Copy of ``init`` with updated token vectors; recomposes the cache."""
    token_vectors = token_vecs.astype(np.float32)
    composed = token_vectors.copy()
    lo, hi = init.ngram_range
    for token, idx in init.vocab.items():
        for b in ngram_buckets(token, lo, hi, init.bucket_count):
            row = init.bucket_index.get(b)
            if row is not None:
                composed[idx] += init.bucket_vectors[row]
    return EmbeddingTable(
        dim=init.dim,
        vocab=dict(init.vocab),
        token_vectors=token_vectors,
        bucket_vectors=init.bucket_vectors.copy(),
        bucket_index=dict(init.bucket_index),
        ngram_range=init.ngram_range,
        bucket_count=init.bucket_count,
        composed=composed,
    )


def train_unif(
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
    init: EmbeddingTable,
    spec: MarginSpec,
    validation: Callable[[UnifParams], float] | None = None,
) -> UnifParams:
    """Fine-tune token embeddings and the attention vector with margin loss.

    Negatives are in-batch: each code snippet is paired against the codes
    of other pairs in the same shuffled batch (rotation by a random
    nonzero offset, so a snippet is never its own negative). With a
    validation hook, retrieval MRR is evaluated every ``spec.eval_every``
    epochs and the best checkpoint is returned; otherwise the final one.
    """
    if not pairs:
        raise ValueError("pairs must be non-empty")
    desc_bags = [_resolve_bag(tuple(d), init) for d, _ in pairs]
    code_bags = [_resolve_bag(tuple(c), init) for _, c in pairs]

    token_vecs = init.token_vectors.astype(np.float64)
    attention = np.zeros(init.dim, dtype=np.float64)
    optimizer = Adam({"vecs": token_vecs, "att": attention}, spec.learning_rate)
    rng = np.random.default_rng(spec.seed)

    best_mrr = -1.0
    best: tuple[np.ndarray, np.ndarray] | None = None
    for epoch in range(spec.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(order), spec.batch_size):
            batch = order[start : start + spec.batch_size]
            if batch.size < 2:
                continue  # a singleton has no in-batch negative
            triplets = []
            for _ in range(spec.negatives_per_positive):
                offset = int(rng.integers(1, batch.size))
                for row, i in enumerate(batch):
                    j = batch[(row + offset) % batch.size]
                    triplets.append((desc_bags[i], code_bags[i], code_bags[j]))
            loss, grad_vecs, grad_att = unif_batch_loss_and_grads(
                token_vecs, attention, triplets, spec.margin
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite margin loss at epoch {epoch}: {loss!r}; "
                    "check the learning rate and the input pairs"
                )
            optimizer.step({"vecs": grad_vecs, "att": grad_att})
        if validation is not None and (epoch + 1) % spec.eval_every == 0:
            snapshot = UnifParams(
                token_table=_retable(init, token_vecs), attention=attention.copy()
            )
            mrr = validation(snapshot)
            if mrr > best_mrr:
                best_mrr = mrr
                best = (token_vecs.copy(), attention.copy())
    if validation is not None and best is not None:
        token_vecs, attention = best
    return UnifParams(token_table=_retable(init, token_vecs), attention=attention.copy())


def save_unif_params(params: UnifParams, path: str | Path) -> None:
    """Table section plus one trailing attention row keyed "<attention>"."""
    path = Path(path)
    save_table(params.token_table, path)
    with path.open("a", encoding="utf-8", newline="\n") as handle:
        floats = " ".join(repr(float(x)) for x in params.attention)
        handle.write(f"{ATTENTION_KEY} {floats}\n")


def load_unif_params(path: str | Path) -> UnifParams:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path}: empty UNIF parameter file")
    header = lines[0].split()
    try:
        count, dim = int(header[0]), int(header[1])
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: bad header, expected '<count> <dim>'") from exc
    if len(lines) < count + 2:
        raise DataError(f"{path}: expected {count} token rows plus an attention row")

    def parse_row(line: str, lineno: int) -> tuple[str, np.ndarray]:
        parts = line.rsplit(" ", dim)
        if len(parts) != dim + 1 or not parts[0]:
            raise DataError(f"{path}:{lineno}: expected a key and {dim} floats")
        return parts[0], np.asarray([float(x) for x in parts[1:]], dtype=np.float32)

    token_map: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1 : count + 1], start=2):
        key, vec = parse_row(line, lineno)
        token_map[key] = vec
    att_key, att_vec = parse_row(lines[count + 1], count + 2)
    if att_key != ATTENTION_KEY:
        raise DataError(f"{path}: final row must be keyed {ATTENTION_KEY!r}")
    table = assemble_table(token_map, dim, path)
    return UnifParams(token_table=table, attention=att_vec.astype(np.float64))

"""Duplicate-title fine-tuning: ReLU-clipped cosine into a logistic head.

Trains the probability head P(duplicate | t1, t2) = sigmoid(w * relu(cos)
+ b) with binary cross-entropy over positive/negative title pairs, letting
gradients flow through the head, the clipped cosine, and the encoder's own
parameters. Two trainable encoders are supported: bag-of-words over an
embedding table (the word vectors train) and a frozen imported encoder
with a square linear projection on top (identity-initialized), standing in
for full backbone fine-tuning.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import NlTokenConfig, tokenize_natural
from .embed import EmbeddingTable, ngram_buckets
from .encoders import Encoder, _retable
from .errors import DataError
from .miner import TrainingPair
from .optim import Adam

logger = logging.getLogger(__name__)

HEAD_INIT_W = 15.0
HEAD_INIT_B = -5.0


@dataclass
class DupHead:
    """Scalar affine layer over the clipped cosine, before the logistic."""

    w: float = HEAD_INIT_W
    b: float = HEAD_INIT_B

    def __post_init__(self) -> None:
        if not (np.isfinite(self.w) and np.isfinite(self.b)):
            raise ValueError("head parameters must be finite")


@dataclass(frozen=True)
class TuneSpec:
    """Fine-tuning hyper-parameters.

    ``eval_every`` counts training examples between validation runs;
    ``negatives_per_positive`` documents the pair construction and is used
    by callers that sample pairs on the fly.
    """

    epochs: int = 15
    batch_size: int = 512
    learning_rate: float = 1e-4
    negatives_per_positive: int = 5
    eval_every: int = 51_200
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.epochs, self.batch_size, self.eval_every) < 1:
            raise ValueError("epochs, batch_size, eval_every must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.negatives_per_positive < 0:
            raise ValueError("negatives_per_positive must be >= 0")


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def duplicate_probability(v1: np.ndarray, v2: np.ndarray, head: DupHead) -> float:
    """sigmoid(w * relu(cos(v1, v2)) + b)."""
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    if v1.shape != v2.shape:
        raise ValueError("vectors must have the same dimension")
    n1 = float(np.linalg.norm(v1))
    n2 = float(np.linalg.norm(v2))
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    sim = max(0.0, float(v1 @ v2) / (n1 * n2))
    return _sigmoid(sim * head.w + head.b)


class TrainableNbowEncoder:
    """Bag-of-words encoder whose word vectors are fine-tuned.

    Subword bucket vectors stay frozen; gradients land on the vocabulary
    token vectors only, so the table's composition invariant survives
    tuning.
    """

    kind = "nbow"

    def __init__(self, table: EmbeddingTable, config: NlTokenConfig | None = None) -> None:
        self._init_table = table
        self.config = config or NlTokenConfig()
        self.token_vecs = table.token_vectors.astype(np.float64)
        self._const_cache: dict[str, tuple[tuple[tuple[int, int], ...], np.ndarray]] = {}

    @property
    def dim(self) -> int:
        return self._init_table.dim

    def params(self) -> dict[str, np.ndarray]:
        return {"vecs": self.token_vecs}

    def resolve(self, text: str):
        ref = self._const_cache.get(text)
        if ref is not None:
            return ref
        table = self._init_table
        tokens = tokenize_natural(text, self.config)
        counts: dict[int, int] = {}
        const = np.zeros(table.dim, dtype=np.float64)
        lo, hi = table.ngram_range
        for token in tokens:
            idx = table.vocab.get(token)
            if idx is None:
                vec, _ = table.lookup_flagged(token)
                const += vec
            else:
                counts[idx] = counts.get(idx, 0) + 1
                for bkt in ngram_buckets(token, lo, hi, table.bucket_count):
                    row = table.bucket_index.get(bkt)
                    if row is not None:
                        const += table.bucket_vectors[row]
        ref = (tuple(counts.items()), const)
        self._const_cache[text] = ref
        return ref

    def forward(self, ref) -> np.ndarray:
        counts, const = ref
        out = const.copy()
        for idx, count in counts:
            out += count * self.token_vecs[idx]
        return out

    def backward(self, ref, grad_out: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        counts, _ = ref
        for idx, count in counts:
            grads["vecs"][idx] += count * grad_out

    def encode(self, text: str) -> np.ndarray:
        return self.forward(self.resolve(text))

    encode_document = encode
    encode_query = encode

    def finalized_table(self) -> EmbeddingTable:
        """Embedding table with the tuned word vectors baked in."""
        return _retable(self._init_table, self.token_vecs)


class TrainableProjectionEncoder:
    """Frozen base encoder with a trainable square projection on top."""

    kind = "projected"

    def __init__(self, base: Encoder) -> None:
        self.base = base
        self.projection = np.eye(base.dim, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.base.dim

    def params(self) -> dict[str, np.ndarray]:
        return {"proj": self.projection}

    def resolve(self, text: str) -> np.ndarray:
        return self.base.encode_query(text).astype(np.float64)

    def forward(self, ref: np.ndarray) -> np.ndarray:
        return self.projection @ ref

    def backward(self, ref: np.ndarray, grad_out: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        grads["proj"] += np.outer(grad_out, ref)

    def encode(self, text: str) -> np.ndarray:
        return self.forward(self.resolve(text))

    encode_document = encode
    encode_query = encode


def duplicate_batch_loss_and_grads(
    encoder,
    w: float,
    b: float,
    batch: Sequence[tuple[object, object, float]],
    param_grads: dict[str, np.ndarray],
) -> tuple[float, float, float, int]:
    """Mean BCE over the batch; returns (loss, grad_w, grad_b, used).

    ``batch`` holds (ref_a, ref_b, label) triples; pairs whose encoding is
    a zero vector are skipped (cosine undefined). Gradients w.r.t. the
    encoder parameters are accumulated into ``param_grads``; the ReLU
    subgradient at exactly zero is taken as zero.
    """
    per_pair: list[tuple[object, object, float, np.ndarray, np.ndarray, float, float]] = []
    for ref_a, ref_b, label in batch:
        u = encoder.forward(ref_a)
        v = encoder.forward(ref_b)
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        if nu == 0.0 or nv == 0.0:
            continue
        per_pair.append((ref_a, ref_b, label, u, v, nu, nv))
    used = len(per_pair)
    if used == 0:
        return 0.0, 0.0, 0.0, 0
    loss = 0.0
    grad_w = 0.0
    grad_b = 0.0
    for ref_a, ref_b, label, u, v, nu, nv in per_pair:
        c = float(u @ v) / (nu * nv)
        s = max(0.0, c)
        z = s * w + b
        # stable BCE: log(1 + e^-z) and friends via logaddexp
        loss += float(np.logaddexp(0.0, -z)) if label == 1.0 else float(np.logaddexp(0.0, z))
        dz = (_sigmoid(z) - label) / used
        grad_w += dz * s
        grad_b += dz
        if c > 0.0:
            dc = dz * w
            gu = dc * (v / (nu * nv) - c * u / (nu * nu))
            gv = dc * (u / (nu * nv) - c * v / (nv * nv))
            encoder.backward(ref_a, gu, param_grads)
            encoder.backward(ref_b, gv, param_grads)
    return loss / used, grad_w, grad_b, used


def train_duplicate_head(
    encoder,
    pairs: Sequence[TrainingPair],
    spec: TuneSpec,
    validation: Callable[[object, DupHead], float] | None = None,
) -> tuple[object, DupHead]:
    """Fine-tune an encoder and the logistic duplicate head with Adam.

    The head starts at w=15, b=-5 so that high-cosine pairs open with a
    high duplicate probability. With a validation hook, retrieval MRR is
    measured every ``spec.eval_every`` training examples and the best
    snapshot is restored at the end; otherwise the final state is kept.
    """
    labels = {p.label for p in pairs}
    if labels != {"positive", "negative"}:
        raise ValueError("pairs must contain both positive and negative labels")
    refs = {text: encoder.resolve(text) for p in pairs for text in (p.text_a, p.text_b)}

    head_w = np.asarray([HEAD_INIT_W], dtype=np.float64)
    head_b = np.asarray([HEAD_INIT_B], dtype=np.float64)
    params = {"w": head_w, "b": head_b, **encoder.params()}
    optimizer = Adam(params, spec.learning_rate)
    rng = np.random.default_rng(spec.seed)

    best_mrr = -1.0
    best_state: dict[str, np.ndarray] | None = None
    examples_seen = 0
    next_eval = spec.eval_every
    skipped = 0
    for _epoch in range(spec.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(order), spec.batch_size):
            batch_pairs = [pairs[i] for i in order[start : start + spec.batch_size]]
            batch = [
                (refs[p.text_a], refs[p.text_b], 1.0 if p.label == "positive" else 0.0)
                for p in batch_pairs
            ]
            grads = {k: np.zeros_like(v) for k, v in params.items()}
            loss, grad_w, grad_b, used = duplicate_batch_loss_and_grads(
                encoder, float(head_w[0]), float(head_b[0]), batch, grads
            )
            skipped += len(batch) - used
            if used == 0:
                continue
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite duplicate-head loss {loss!r}; "
                    "check the learning rate and the training pairs"
                )
            grads["w"][0] = grad_w
            grads["b"][0] = grad_b
            optimizer.step(grads)
            examples_seen += used
            if validation is not None and examples_seen >= next_eval:
                next_eval += spec.eval_every
                mrr = validation(encoder, DupHead(w=float(head_w[0]), b=float(head_b[0])))
                if mrr > best_mrr:
                    best_mrr = mrr
                    best_state = {k: v.copy() for k, v in params.items()}
    if skipped:
        logger.info("skipped %d pairs with zero-vector encodings", skipped)
    if validation is not None and best_state is not None:
        for key, value in best_state.items():
            params[key][...] = value
    return encoder, DupHead(w=float(head_w[0]), b=float(head_b[0]))


def save_head(head: DupHead, path: str | Path) -> None:
    """Two decimal floats on one line."""
    Path(path).write_text(f"{head.w!r} {head.b!r}\n", encoding="utf-8")


def load_head(path: str | Path) -> DupHead:
    text = Path(path).read_text(encoding="utf-8").strip()
    parts = text.split()
    if len(parts) != 2:
        raise DataError(f"{path}: expected two floats on one line")
    try:
        return DupHead(w=float(parts[0]), b=float(parts[1]))
    except ValueError as exc:
        raise DataError(f"{path}: bad head value: {exc}") from exc

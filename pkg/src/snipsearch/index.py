"""Ensemble snippet index: weighted score fusion as a single cosine kNN.

Each snippet row concatenates its description vector and code vector, each
independently normalized to unit length and scaled by its ensemble weight.
Query halves are normalized the same way (unscaled), which makes the
cosine against a row an exact monotone transform of the weighted sum
lambda_d * cos_desc + lambda_c * cos_code. Search is exact brute-force
top-k; built indexes are immutable.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import SnippetCollection
from .encoders import Encoder
from .errors import DataError

logger = logging.getLogger(__name__)

MAGIC = b"ACSI"
FORMAT_VERSION = 1


@dataclass
class EnsembleSpec:
    """Ensemble weights and the two encoders they apply to.

    An encoder may be omitted only when its weight is zero (single-model
    indexes are the (1, 0) and (0, 1) special cases).
    """

    lambda_desc: float
    lambda_code: float
    desc_encoder: Encoder | None
    code_encoder: Encoder | None

    def __post_init__(self) -> None:
        if self.lambda_desc < 0 or self.lambda_code < 0:
            raise ValueError("ensemble weights must be non-negative")
        if self.lambda_desc == 0 and self.lambda_code == 0:
            raise ValueError("at least one ensemble weight must be positive")
        if self.lambda_desc > 0 and self.desc_encoder is None:
            raise ValueError("lambda_desc > 0 requires a description encoder")
        if self.lambda_code > 0 and self.code_encoder is None:
            raise ValueError("lambda_code > 0 requires a code encoder")

    @property
    def desc_dim(self) -> int:
        return self.desc_encoder.dim if self.desc_encoder is not None else 0

    @property
    def code_dim(self) -> int:
        return self.code_encoder.dim if self.code_encoder is not None else 0


@dataclass
class SearchOutcome:
    """Ranked (id, cosine) pairs; the flag marks an unencodable query."""

    results: list[tuple[str, float]]
    empty_encoding: bool = False


@dataclass
class SnippetIndex:
    """Immutable matrix of per-snippet ensemble vectors plus metadata."""

    vectors: np.ndarray  # (N, desc_dim + code_dim) float64
    ids: tuple[str, ...]
    spec: EnsembleSpec
    zero_desc_ids: tuple[str, ...] = ()
    zero_code_ids: tuple[str, ...] = ()
    excluded_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.vectors.shape[0] != len(self.ids):
            raise ValueError("one vector row per snippet id required")

    def __len__(self) -> int:
        return len(self.ids)


def _normalized_half(vec: np.ndarray, weight: float) -> tuple[np.ndarray, bool]:
    """weight * unit(vec); flags a zero half (empty/unknown input)."""
    vec = np.asarray(vec, dtype=np.float64)
    if weight == 0.0:
        return np.zeros_like(vec), True
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return np.zeros_like(vec), True
    return (weight / norm) * vec, False


def build_index(collection: SnippetCollection, spec: EnsembleSpec) -> SnippetIndex:
    """Encode every snippet into its ensemble row.

    A half that encodes to zero (empty or fully out-of-vocabulary input)
    stays zero and is recorded; snippets whose both halves are zero are
    excluded from the index and reported.
    """
    desc_dim, code_dim = spec.desc_dim, spec.code_dim
    rows: list[np.ndarray] = []
    ids: list[str] = []
    zero_desc: list[str] = []
    zero_code: list[str] = []
    excluded: list[str] = []
    for snippet in collection:
        desc_vec = (
            spec.desc_encoder.encode_document(snippet.description)
            if spec.desc_encoder is not None
            else np.zeros(0)
        )
        code_vec = (
            spec.code_encoder.encode_document(snippet.code)
            if spec.code_encoder is not None
            else np.zeros(0)
        )
        desc_half, desc_zero = _normalized_half(desc_vec, spec.lambda_desc)
        code_half, code_zero = _normalized_half(code_vec, spec.lambda_code)
        if desc_zero and spec.lambda_desc > 0:
            zero_desc.append(snippet.id)
        if code_zero and spec.lambda_code > 0:
            zero_code.append(snippet.id)
        if desc_zero and code_zero:
            excluded.append(snippet.id)
            continue
        rows.append(np.concatenate([desc_half, code_half]))
        ids.append(snippet.id)
    if excluded:
        logger.warning("excluded %d snippets with no encodable half", len(excluded))
    matrix = (
        np.stack(rows) if rows else np.zeros((0, desc_dim + code_dim), dtype=np.float64)
    )
    return SnippetIndex(
        vectors=matrix,
        ids=tuple(ids),
        spec=spec,
        zero_desc_ids=tuple(zero_desc),
        zero_code_ids=tuple(zero_code),
        excluded_ids=tuple(excluded),
    )


def encode_query(index: SnippetIndex, query: str) -> tuple[np.ndarray, bool]:
    """Concatenated unit query halves; flag True when both halves are zero."""
    spec = index.spec
    desc_vec = (
        spec.desc_encoder.encode_query(query) if spec.desc_encoder is not None else np.zeros(0)
    )
    code_vec = (
        spec.code_encoder.encode_query(query) if spec.code_encoder is not None else np.zeros(0)
    )
    desc_half, desc_zero = _normalized_half(desc_vec, 1.0 if spec.lambda_desc > 0 else 0.0)
    code_half, code_zero = _normalized_half(code_vec, 1.0 if spec.lambda_code > 0 else 0.0)
    return np.concatenate([desc_half, code_half]), desc_zero and code_zero


def search(index: SnippetIndex, query: str, k: int) -> SearchOutcome:
    """Exact top-k by cosine, ties broken by ascending snippet id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        return SearchOutcome(results=[])
    query_vec, empty = encode_query(index, query)
    if empty:
        return SearchOutcome(results=[], empty_encoding=True)
    query_norm = float(np.linalg.norm(query_vec))
    row_norms = np.linalg.norm(index.vectors, axis=1)
    cosines = (index.vectors @ query_vec) / (row_norms * query_norm)
    order = sorted(range(len(index)), key=lambda i: (-cosines[i], index.ids[i]))
    top = order[: min(k, len(order))]
    return SearchOutcome(results=[(index.ids[i], float(cosines[i])) for i in top])


# ---------------------------------------------------------------------------
# Binary container ("ACSI"): little-endian, float32 matrix


def save_index(index: SnippetIndex, path: str | Path) -> None:
    spec = index.spec
    desc_kind = spec.desc_encoder.kind if spec.desc_encoder is not None else ""
    code_kind = spec.code_encoder.kind if spec.code_encoder is not None else ""
    with Path(path).open("wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<H", FORMAT_VERSION))
        handle.write(struct.pack("<II", spec.desc_dim, spec.code_dim))
        handle.write(struct.pack("<dd", spec.lambda_desc, spec.lambda_code))
        for kind in (desc_kind, code_kind):
            encoded = kind.encode("utf-8")
            handle.write(struct.pack("<B", len(encoded)))
            handle.write(encoded)
        handle.write(struct.pack("<I", len(index)))
        handle.write(np.ascontiguousarray(index.vectors, dtype="<f4").tobytes())
        for snippet_id in index.ids:
            encoded = snippet_id.encode("utf-8")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)


def load_index(
    path: str | Path,
    desc_encoder: Encoder | None = None,
    code_encoder: Encoder | None = None,
) -> SnippetIndex:
    """Load a container and reattach the encoders used to build it.

    The stored dims and encoder kinds are checked against the supplied
    encoders; zero-half bookkeeping is recomputed from the matrix.
    """
    data = Path(path).read_bytes()
    view = memoryview(data)

    def take(n: int) -> memoryview:
        nonlocal view
        if len(view) < n:
            raise DataError(f"{path}: truncated index container")
        chunk, view = view[:n], view[n:]
        return chunk

    if bytes(take(4)) != MAGIC:
        raise DataError(f"{path}: not a snippet index container")
    (version,) = struct.unpack("<H", take(2))
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported container version {version}")
    desc_dim, code_dim = struct.unpack("<II", take(8))
    lambda_desc, lambda_code = struct.unpack("<dd", take(16))
    kinds = []
    for _ in range(2):
        (klen,) = struct.unpack("<B", take(1))
        kinds.append(bytes(take(klen)).decode("utf-8"))
    desc_kind, code_kind = kinds
    (n_rows,) = struct.unpack("<I", take(4))
    width = desc_dim + code_dim
    matrix = (
        np.frombuffer(take(4 * n_rows * width), dtype="<f4")
        .reshape(n_rows, width)
        .astype(np.float64)
    )
    ids = []
    for _ in range(n_rows):
        (idlen,) = struct.unpack("<H", take(2))
        ids.append(bytes(take(idlen)).decode("utf-8"))

    for encoder, want_dim, want_kind, side in (
        (desc_encoder, desc_dim, desc_kind, "description"),
        (code_encoder, code_dim, code_kind, "code"),
    ):
        if encoder is None:
            continue
        if encoder.dim != want_dim:
            raise DataError(
                f"{path}: {side} encoder dim {encoder.dim} != stored {want_dim}"
            )
        if want_kind and encoder.kind != want_kind:
            raise DataError(
                f"{path}: {side} encoder kind {encoder.kind!r} != stored {want_kind!r}"
            )
    spec = EnsembleSpec(
        lambda_desc=lambda_desc,
        lambda_code=lambda_code,
        desc_encoder=desc_encoder,
        code_encoder=code_encoder,
    )
    desc_norms = np.linalg.norm(matrix[:, :desc_dim], axis=1)
    code_norms = np.linalg.norm(matrix[:, desc_dim:], axis=1)
    zero_desc = tuple(
        ids[i] for i in range(n_rows) if lambda_desc > 0 and desc_norms[i] == 0
    )
    zero_code = tuple(
        ids[i] for i in range(n_rows) if lambda_code > 0 and code_norms[i] == 0
    )
    return SnippetIndex(
        vectors=matrix,
        ids=tuple(ids),
        spec=spec,
        zero_desc_ids=zero_desc,
        zero_code_ids=zero_code,
    )

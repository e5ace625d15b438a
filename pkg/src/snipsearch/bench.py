"""Retrieval evaluation: reciprocal rank, recall@k, and overlap histograms.

All reductions are computed in query order so that reruns over identical
inputs produce identical reports.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from .corpus import NlTokenConfig, SnippetCollection, word_overlap
from .errors import DataError

MRR_CUTOFF = 10
RECALL_KS = (3, 10)


@dataclass(frozen=True)
class GroundTruthQuery:
    """A query string linked to the ids of its relevant snippets."""

    query: str
    relevant_ids: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "relevant_ids", frozenset(self.relevant_ids))
        if not self.relevant_ids:
            raise DataError(f"ground-truth query {self.query!r} has no relevant ids")


@dataclass
class EvalReport:
    """Metrics for one (model, collection) pair.

    ``per_query`` keeps one ``(query, first_relevant_rank)`` entry per
    evaluated query, in evaluation order; the rank is ``None`` when no
    relevant snippet appeared anywhere in the returned ranking.
    """

    model: str
    collection: str
    mrr: float
    recall_at: dict[int, float]
    per_query: list[tuple[str, int | None]]
    n_queries: int


@dataclass
class OverlapHistogram:
    """Relative word overlap of (query, matching description) pairs."""

    counts: list[int]  # 10 equal-width bins over [0, 1], last bin closed
    mean: float | None
    pairs: int
    empty_query_pairs: int


def reciprocal_rank(ranking: Sequence[str], relevant: Iterable[str], cutoff: int = MRR_CUTOFF) -> float:
    """1/rank of the first relevant id within ``cutoff`` results, else 0."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    relevant = frozenset(relevant)
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    for position, snippet_id in enumerate(ranking[:cutoff], start=1):
        if snippet_id in relevant:
            return 1.0 / position
    return 0.0


def first_relevant_rank(ranking: Sequence[str], relevant: frozenset[str]) -> int | None:
    for position, snippet_id in enumerate(ranking, start=1):
        if snippet_id in relevant:
            return position
    return None


def evaluate(
    search: Callable[[str], Sequence[str]],
    queries: Sequence[GroundTruthQuery],
    *,
    mrr_cutoff: int = MRR_CUTOFF,
    recall_ks: Sequence[int] = RECALL_KS,
    collection_ids: set[str] | None = None,
    model: str = "",
    collection: str = "",
) -> EvalReport:
    """Run every query through ``search`` and reduce to MRR and recall@k.

    ``search`` maps a query string to an ordered list of snippet ids; it
    must return at least ``max(mrr_cutoff, *recall_ks)`` results to make the
    metrics meaningful. When ``collection_ids`` is given, every relevant id
    is checked against it up front.
    """
    if not queries:
        raise ValueError("queries must be non-empty")
    if collection_ids is not None:
        for q in queries:
            missing = q.relevant_ids - collection_ids
            if missing:
                raise DataError(
                    f"query {q.query!r} references unknown snippet id {sorted(missing)[0]!r}"
                )
    per_query: list[tuple[str, int | None]] = []
    rr_sum = 0.0
    hits = {k: 0 for k in recall_ks}
    for q in queries:
        ranking = list(search(q.query))
        rank = first_relevant_rank(ranking, q.relevant_ids)
        per_query.append((q.query, rank))
        if rank is not None and rank <= mrr_cutoff:
            rr_sum += 1.0 / rank
        for k in recall_ks:
            if rank is not None and rank <= k:
                hits[k] += 1
    n = len(queries)
    return EvalReport(
        model=model,
        collection=collection,
        mrr=rr_sum / n,
        recall_at={k: hits[k] / n for k in recall_ks},
        per_query=per_query,
        n_queries=n,
    )


def overlap_histogram(
    queries: Sequence[GroundTruthQuery],
    collection: SnippetCollection,
    config: NlTokenConfig | None = None,
) -> OverlapHistogram:
    """Histogram of relative overlap over all (query, matching snippet) pairs.

    Ten equal-width bins over [0, 1]; the last bin includes the right edge.
    Pairs whose query has no unique tokens after preprocessing are excluded
    and counted separately.
    """
    by_id = {s.id: s for s in collection}
    counts = [0] * 10
    total = 0.0
    included = 0
    empty = 0
    for q in queries:
        for snippet_id in sorted(q.relevant_ids):
            snippet = by_id.get(snippet_id)
            if snippet is None:
                raise DataError(
                    f"query {q.query!r} references unknown snippet id {snippet_id!r}"
                )
            stats = word_overlap(q.query, snippet.description, config)
            if stats.empty_query:
                empty += 1
                continue
            counts[min(int(stats.relative * 10), 9)] += 1
            total += stats.relative
            included += 1
    return OverlapHistogram(
        counts=counts,
        mean=(total / included) if included else None,
        pairs=included,
        empty_query_pairs=empty,
    )


def run_benchmark(
    models: Sequence[tuple[str, Callable[[str], Sequence[str]]]],
    queries: Sequence[GroundTruthQuery],
    collection: SnippetCollection,
    *,
    mrr_cutoff: int = MRR_CUTOFF,
    recall_ks: Sequence[int] = RECALL_KS,
) -> list[EvalReport]:
    """Evaluate every named search function over the same query set."""
    if not models:
        raise ValueError("at least one model is required")
    ids = collection.ids()
    return [
        evaluate(
            search,
            queries,
            mrr_cutoff=mrr_cutoff,
            recall_ks=recall_ks,
            collection_ids=ids,
            model=name,
            collection=collection.name,
        )
        for name, search in models
    ]


def render_text_table(reports: Sequence[EvalReport]) -> str:
    """Plain-text result table; values as percentages with one decimal."""
    ks = sorted({k for r in reports for k in r.recall_at})
    header = ["model", "collection", "mrr"] + [f"r@{k}" for k in ks] + ["queries"]
    rows = [header]
    for r in reports:
        rows.append(
            [r.model, r.collection, f"{100 * r.mrr:.1f}"]
            + [f"{100 * r.recall_at[k]:.1f}" if k in r.recall_at else "-" for k in ks]
            + [str(r.n_queries)]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def render_report_jsonl(reports: Sequence[EvalReport]) -> str:
    """Machine-readable report: one JSON object per model, full precision."""
    lines = []
    for r in reports:
        record: dict[str, object] = {
            "model": r.model,
            "collection": r.collection,
            "mrr": r.mrr,
        }
        for k in sorted(r.recall_at):
            record[f"r{k}"] = r.recall_at[k]
        record["n_queries"] = r.n_queries
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def load_ground_truth(path: str | Path) -> list[GroundTruthQuery]:
    """Load queries from a JSON-lines file with keys query, relevant_ids."""
    path = Path(path)
    queries: list[GroundTruthQuery] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc.msg}") from exc
            try:
                queries.append(
                    GroundTruthQuery(
                        query=str(record["query"]),
                        relevant_ids=frozenset(str(i) for i in record["relevant_ids"]),
                    )
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing key {exc.args[0]!r}") from exc
    return queries


def save_ground_truth(queries: Sequence[GroundTruthQuery], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for q in queries:
            record = {"query": q.query, "relevant_ids": sorted(q.relevant_ids)}
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")

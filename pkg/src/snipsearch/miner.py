"""Mining heuristics: from raw Q&A post dumps to snippet collections.

Turns an offline dump of question posts (title, votes, tags, answers with
code blocks) into an annotated snippet collection, and duplicate-post links
into ground-truth queries and title-pair training data. No network access:
dumps are ingested from files only.
"""

from __future__ import annotations

import json
import logging
import random
import re
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path
from typing import Literal

from .bench import GroundTruthQuery
from .corpus import AnnotatedSnippet, SnippetCollection, word_overlap
from .errors import DataError

logger = logging.getLogger(__name__)

_PROMPT_RES = (
    re.compile(r"^>>> "),
    re.compile(r"^\.\.\. "),
    re.compile(r"^In \[\d+\]: "),
)
_PROMPT_ONLY_RES = (
    re.compile(r"^>>>\s*$"),
    re.compile(r"^\.\.\.\s*$"),
    re.compile(r"^In \[\d+\]:\s*$"),
)


def _load_rewrite_rules() -> tuple[str, ...]:
    text = (files("snipsearch") / "data" / "rewrite_rules.txt").read_text("utf-8")
    return tuple(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


REWRITE_RULES = _load_rewrite_rules()


@dataclass(frozen=True)
class Answer:
    score: int
    code_blocks: tuple[str, ...]


@dataclass(frozen=True)
class RawPost:
    id: str
    title: str
    score: int
    tags: tuple[str, ...]
    answers: tuple[Answer, ...]


@dataclass(frozen=True)
class DuplicateEdge:
    src: str
    dst: str

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise DataError(f"self duplicate edge for post {self.src!r}")


@dataclass(frozen=True)
class DuplicateGroup:
    """Connected component of duplicate-tagged posts, members sorted."""

    members: tuple[str, ...]


@dataclass(frozen=True)
class TrainingPair:
    text_a: str
    text_b: str
    label: Literal["positive", "negative"]


def strip_prompts(code: str) -> str:
    """Remove interpreter prompt prefixes (">>> ", "... ", "In [n]: ").

    Prefixes are stripped repeatedly so the result is a fixpoint; lines
    consisting only of a prompt are dropped.
    """
    out: list[str] = []
    for line in code.split("\n"):
        while True:
            if any(p.match(line) for p in _PROMPT_ONLY_RES):
                line = None
                break
            for p in _PROMPT_RES:
                m = p.match(line)
                if m:
                    line = line[m.end() :]
                    break
            else:
                break
        if line is not None:
            out.append(line)
    return "\n".join(out)


def rewrite_question(title: str) -> str:
    """Rewrite a question title into a description.

    Applies the first matching prefix rule from the committed rule table,
    strips trailing question marks, and capitalizes the first letter.
    """
    text = title
    lowered = text.lower()
    for rule in REWRITE_RULES:
        if lowered.startswith(rule + " "):
            text = text[len(rule) + 1 :].lstrip()
            break
    text = text.rstrip()
    while text.endswith("?"):
        text = text[:-1].rstrip()
    if text:
        text = text[0].upper() + text[1:]
    return text


def default_validator(code: str) -> bool:
    """Cheap syntactic sanity check: balanced brackets/quotes, sane indents.

    Deliberately weaker than a real parser: it accepts code with broken
    block structure (e.g. a missing indent after a colon) as long as the
    bracketing is sound and no line mixes tabs and spaces in its leading
    whitespace.
    """
    pairs = {")": "(", "]": "[", "}": "{"}
    stack: list[str] = []
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if ch == "#":
            j = code.find("\n", i)
            i = n if j == -1 else j
        elif ch in "'\"":
            i, ok = _scan_string(code, i)
            if not ok:
                return False
        elif ch in "([{":
            stack.append(ch)
            i += 1
        elif ch in ")]}":
            if not stack or stack.pop() != pairs[ch]:
                return False
            i += 1
        else:
            i += 1
    if stack:
        return False
    for line in code.split("\n"):
        indent = line[: len(line) - len(line.lstrip(" \t"))]
        if " " in indent and "\t" in indent:
            return False
    return True


def _scan_string(code: str, i: int) -> tuple[int, bool]:
    quote = code[i]
    n = len(code)
    if code[i : i + 3] == quote * 3:
        end = code.find(quote * 3, i + 3)
        return (n, False) if end == -1 else (end + 3, True)
    j = i + 1
    while j < n:
        if code[j] == "\\":
            j += 2
        elif code[j] == quote:
            return j + 1, True
        elif code[j] == "\n":
            return j, False
        else:
            j += 1
    return n, False


def python_grammar_validator(code: str) -> bool:
    """Full-grammar plug-in: accept only code that parses as Python 3."""
    import ast

    try:
        ast.parse(code)
    except (SyntaxError, ValueError):
        return False
    return True


def validate_snippet(code: str, validator: Callable[[str], bool] | None = None) -> bool:
    """Apply a syntactic-validity predicate; a crashing predicate rejects."""
    predicate = validator or default_validator
    try:
        return bool(predicate(code))
    except Exception:
        logger.exception("snippet validator crashed; treating snippet as invalid")
        return False


def mine_snippets(
    posts: Sequence[RawPost],
    tag_whitelist: Iterable[str],
    per_tag_cap: int = 250,
    per_post_cap: int = 2,
    validator: Callable[[str], bool] | None = None,
) -> SnippetCollection:
    """Extract an annotated snippet collection from raw posts.

    Tags are visited in sorted order; within a tag, posts in decreasing
    vote order (ties by ascending id). Per post at most ``per_post_cap``
    snippets are taken from its highest-scored answers; a snippet is the
    concatenation of the answer's prompt-stripped, validity-passing code
    blocks. Snippet ids are ``<post_id>#<n>``. Exact duplicate code is
    removed at the end, keeping the first occurrence.
    """
    tags = sorted(set(tag_whitelist))
    if not tags:
        raise DataError("tag whitelist is empty")
    if per_post_cap < 1:
        raise ValueError("per_post_cap must be >= 1")

    by_tag: dict[str, list[RawPost]] = {t: [] for t in tags}
    for post in posts:
        for tag in post.tags:
            if tag in by_tag:
                by_tag[tag].append(post)

    snippets: list[AnnotatedSnippet] = []
    next_seq: dict[str, int] = {}
    skipped_titles = 0
    for tag in tags:
        taken_for_tag = 0
        for post in sorted(by_tag[tag], key=lambda p: (-p.score, p.id)):
            if taken_for_tag >= per_tag_cap:
                break
            description = rewrite_question(post.title)
            if not description.strip():
                skipped_titles += 1
                continue
            taken_for_post = 0
            answers = sorted(
                enumerate(post.answers), key=lambda pair: (-pair[1].score, pair[0])
            )
            for _, answer in answers:
                if taken_for_post >= per_post_cap or taken_for_tag >= per_tag_cap:
                    break
                blocks = [strip_prompts(b) for b in answer.code_blocks]
                passing = [b for b in blocks if b.strip() and validate_snippet(b, validator)]
                if not passing:
                    continue
                code = "\n".join(passing)
                seq = next_seq.get(post.id, 0) + 1
                next_seq[post.id] = seq
                snippets.append(
                    AnnotatedSnippet(
                        id=f"{post.id}#{seq}",
                        description=description,
                        code=code,
                        url=None,
                        tags=post.tags,
                    )
                )
                taken_for_post += 1
                taken_for_tag += 1

    seen_code: set[str] = set()
    unique: list[AnnotatedSnippet] = []
    for snippet in snippets:
        if snippet.code in seen_code:
            continue
        seen_code.add(snippet.code)
        unique.append(snippet)
    if skipped_titles:
        logger.info("skipped %d posts with empty rewritten titles", skipped_titles)
    return SnippetCollection(snippets=unique, name="mined")


def snippet_source_post(snippet_id: str) -> str:
    """Post id a mined snippet id refers to (inverse of the id scheme)."""
    return snippet_id.rsplit("#", 1)[0]


def post_to_snippet_ids(collection: SnippetCollection) -> dict[str, list[str]]:
    """Map source post id to the snippet ids it contributed."""
    mapping: dict[str, list[str]] = {}
    for snippet in collection:
        mapping.setdefault(snippet_source_post(snippet.id), []).append(snippet.id)
    return mapping


class _DisjointSet:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        root = x
        while self.parent.setdefault(root, root) != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def group_duplicates(edges: Sequence[DuplicateEdge]) -> list[DuplicateGroup]:
    """Connected components of the undirected duplicate graph.

    Members are sorted ascending within each group; groups are ordered by
    their smallest member id.
    """
    dsu = _DisjointSet()
    for edge in edges:
        dsu.union(edge.src, edge.dst)
    components: dict[str, list[str]] = {}
    for node in dsu.parent:
        components.setdefault(dsu.find(node), []).append(node)
    groups = [DuplicateGroup(members=tuple(sorted(m))) for m in components.values()]
    groups.sort(key=lambda g: g.members[0])
    return groups


def build_ground_truth(
    groups: Sequence[DuplicateGroup],
    collection: SnippetCollection,
    post_to_snippets: Mapping[str, Sequence[str]],
    titles: Mapping[str, str],
    *,
    max_overlap: float | None = None,
) -> list[GroundTruthQuery]:
    """Derive ground-truth queries from duplicate groups.

    A group qualifies when it has at least one post that contributed
    snippets to the collection and at least one unused post with a known
    title; the unused post with the lowest id supplies the query text, and
    all snippets of the contributing posts are the relevant results.
    ``max_overlap`` optionally drops queries whose relative word overlap
    with any matching description exceeds the threshold.
    """
    collection_ids = collection.ids()
    by_id = {s.id: s for s in collection}
    queries: list[GroundTruthQuery] = []
    skipped = 0
    for group in groups:
        contributing: list[str] = []
        unused: list[str] = []
        for member in group.members:
            if post_to_snippets.get(member):
                contributing.append(member)
            else:
                unused.append(member)
        relevant = [
            sid
            for member in contributing
            for sid in post_to_snippets[member]
            if sid in collection_ids
        ]
        titled_unused = [m for m in unused if titles.get(m, "").strip()]
        if not relevant or not titled_unused:
            skipped += 1
            continue
        query_text = titles[min(titled_unused)]
        if max_overlap is not None:
            worst = max(
                (word_overlap(query_text, by_id[sid].description).relative or 0.0)
                for sid in relevant
            )
            if worst > max_overlap:
                skipped += 1
                continue
        queries.append(GroundTruthQuery(query=query_text, relevant_ids=frozenset(relevant)))
    if skipped:
        logger.info("skipped %d duplicate groups without query/result posts", skipped)
    return queries


def sample_training_pairs(
    groups: Sequence[DuplicateGroup],
    titles: Mapping[str, str],
    negatives_per_positive: int = 5,
    seed: int = 0,
) -> list[TrainingPair]:
    """One positive title pair per group plus sampled cross-group negatives.

    Fully deterministic given the seed. Negative pairs are resampled until
    the two posts belong to different groups.
    """
    if negatives_per_positive < 0:
        raise ValueError("negatives_per_positive must be >= 0")
    rng = random.Random(seed)

    member_group: dict[str, int] = {}
    eligible: list[tuple[int, list[str]]] = []
    for gi, group in enumerate(groups):
        titled = [m for m in group.members if titles.get(m, "").strip()]
        if len(titled) >= 2:
            eligible.append((gi, titled))
            for m in titled:
                member_group[m] = gi
    if negatives_per_positive > 0 and len(eligible) < 2:
        raise DataError("need at least two duplicate groups to sample cross-group negatives")

    pool = [m for _, titled in eligible for m in titled]
    pairs: list[TrainingPair] = []
    for _, titled in eligible:
        a, b = sorted(rng.sample(titled, 2))
        pairs.append(TrainingPair(text_a=titles[a], text_b=titles[b], label="positive"))
        for _ in range(negatives_per_positive):
            for _attempt in range(1000):
                u, v = rng.choice(pool), rng.choice(pool)
                if member_group[u] != member_group[v]:
                    break
            else:
                raise DataError("could not sample a cross-group negative pair")
            pairs.append(TrainingPair(text_a=titles[u], text_b=titles[v], label="negative"))
    return pairs


def load_posts(path: str | Path) -> list[RawPost]:
    """Load a posts dump: one JSON object per line.

    Keys: id, title, score, tags, answers (list of objects with score and
    code_blocks).
    """
    path = Path(path)
    posts: list[RawPost] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc.msg}") from exc
            try:
                post = RawPost(
                    id=str(record["id"]),
                    title=str(record["title"]),
                    score=int(record["score"]),
                    tags=tuple(str(t) for t in record.get("tags") or ()),
                    answers=tuple(
                        Answer(
                            score=int(a["score"]),
                            code_blocks=tuple(str(b) for b in a.get("code_blocks") or ()),
                        )
                        for a in record.get("answers") or ()
                    ),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad post record: {exc}") from exc
            if post.id in seen:
                raise DataError(f"{path}:{lineno}: duplicate post id {post.id!r}")
            seen.add(post.id)
            posts.append(post)
    return posts


def load_edges(path: str | Path) -> list[DuplicateEdge]:
    """Load duplicate edges: two tab-separated post ids per line."""
    path = Path(path)
    edges: list[DuplicateEdge] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataError(f"{path}:{lineno}: expected two tab-separated post ids")
            try:
                edges.append(DuplicateEdge(src=parts[0], dst=parts[1]))
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return edges


def save_training_pairs(pairs: Sequence[TrainingPair], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for p in pairs:
            handle.write(
                json.dumps(
                    {"text_a": p.text_a, "text_b": p.text_b, "label": p.label},
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_training_pairs(path: str | Path) -> list[TrainingPair]:
    path = Path(path)
    pairs: list[TrainingPair] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                label = record["label"]
                if label not in ("positive", "negative"):
                    raise ValueError(f"bad label {label!r}")
                pairs.append(
                    TrainingPair(
                        text_a=str(record["text_a"]),
                        text_b=str(record["text_b"]),
                        label=label,
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad training pair: {exc}") from exc
    return pairs

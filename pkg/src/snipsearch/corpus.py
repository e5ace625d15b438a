"""Annotated snippet data model and shared text/code preprocessing.

A snippet pairs a short natural-language description with a piece of source
code. Everything downstream (embedding training, encoders, BM25, the
benchmark harness) consumes the tokenizers defined here, so their behaviour
is pinned by committed data files: the stopword list, the stemmer rule
table, and the Python keyword list.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib.resources import files
from pathlib import Path

from .errors import DataError
from .stemmer import stem

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[^\W_]+")  # runs of alphanumerics, underscore excluded

# Identifier-like prefixes that introduce a string literal ("r", "f", ...).
_STRING_PREFIXES = frozenset({"r", "b", "u", "f", "rb", "br", "fr", "rf"})


def _load_wordlist(name: str) -> frozenset[str]:
    text = (files("snipsearch") / "data" / name).read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


DEFAULT_STOPWORDS = _load_wordlist("stopwords.txt")
PYTHON_KEYWORDS = _load_wordlist("python_keywords.txt")


@dataclass(frozen=True)
class AnnotatedSnippet:
    """One (description, code) pair with identity and provenance."""

    id: str
    description: str
    code: str
    url: str | None = None
    tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("snippet id must be non-empty")
        if not self.description.strip():
            raise DataError(f"snippet {self.id!r}: description is empty")
        if not self.code:
            raise DataError(f"snippet {self.id!r}: code is empty")
        object.__setattr__(self, "tags", tuple(self.tags))


@dataclass
class SnippetCollection:
    """Ordered collection of snippets with unique ids."""

    snippets: list[AnnotatedSnippet]
    name: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for snippet in self.snippets:
            if snippet.id in seen:
                raise DataError(f"duplicate snippet id {snippet.id!r}")
            seen.add(snippet.id)

    def __len__(self) -> int:
        return len(self.snippets)

    def __iter__(self):
        return iter(self.snippets)

    def ids(self) -> set[str]:
        return {s.id for s in self.snippets}


@dataclass(frozen=True)
class NlTokenConfig:
    """Natural-language tokenization switches.

    The same config must be applied to queries and descriptions; mixing
    configs silently breaks overlap statistics and description encoders.
    """

    lowercase: bool = True
    lemmatize: bool = True
    stopwords: frozenset[str] = DEFAULT_STOPWORDS


# Query preprocessing for the multimodal code models: no lemmatization.
NCS_QUERY_CONFIG = NlTokenConfig(lemmatize=False)


@dataclass(frozen=True)
class CodeTokens:
    """Token classes retained from a code snippet."""

    identifiers: tuple[str, ...]
    comments: tuple[str, ...]
    raw_identifiers: tuple[str, ...]
    skipped_regions: int = 0

    def all_tokens(self) -> list[str]:
        """Identifier subtokens followed by comment words."""
        return list(self.identifiers) + list(self.comments)


@dataclass(frozen=True)
class OverlapStats:
    """Word overlap between a query and a description.

    ``relative`` is ``None`` for the empty-query outcome (no unique query
    tokens survive preprocessing), otherwise ``absolute / query_unique``.
    """

    absolute: int
    relative: float | None
    query_unique: int

    @property
    def empty_query(self) -> bool:
        return self.relative is None


@lru_cache(maxsize=32)
def _effective_stopwords(stopwords: frozenset[str], lemmatize: bool) -> frozenset[str]:
    # Tokens are checked after stemming, so the removal set must contain the
    # stemmer image of the configured list alongside the surface forms.
    if not lemmatize:
        return stopwords
    return stopwords | {stem(w) for w in stopwords}


def tokenize_natural(text: str, config: NlTokenConfig | None = None) -> list[str]:
    """Tokenize a query or description.

    Splits on non-alphanumeric boundaries (underscore is a boundary),
    lowercases, replaces each token by its stem, and drops stopwords.
    Duplicates are retained: downstream encoders use bag-of-words sums.
    """
    if config is None:
        config = NlTokenConfig()
    tokens = _WORD_RE.findall(text)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    if config.lemmatize:
        tokens = [stem(t) for t in tokens]
    drop = _effective_stopwords(config.stopwords, config.lemmatize)
    return [t for t in tokens if t not in drop]


def split_identifier(raw: str) -> list[str]:
    """Split an identifier on underscores and camel case; lowercase parts.

    Idempotent: rejoining the subtokens with underscores and re-splitting
    yields the same list.
    """
    parts: list[str] = []
    for chunk in raw.split("_"):
        parts.extend(_camel_parts(chunk))
    return [p.lower() for p in parts if p]


def _camel_parts(chunk: str) -> list[str]:
    parts: list[str] = []
    start = 0
    for i in range(1, len(chunk)):
        ch, prev = chunk[i], chunk[i - 1]
        if ch.isupper() and (prev.islower() or prev.isdigit()):
            parts.append(chunk[start:i])
            start = i
        elif ch.isupper() and prev.isupper():
            nxt = chunk[i + 1] if i + 1 < len(chunk) else ""
            if nxt.islower():
                parts.append(chunk[start:i])
                start = i
    parts.append(chunk[start:])
    return parts


def tokenize_code(code: str) -> CodeTokens:
    """Lex Python-syntax code into identifier subtokens and comment words.

    Keeps identifiers (split on camel case and underscores, lowercased) and
    inline-comment words; drops keywords, literals, and operators.
    Unterminated string literals are skipped and counted as bad regions.
    """
    identifiers: list[str] = []
    raw_identifiers: list[str] = []
    comments: list[str] = []
    skipped = 0

    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if ch == "#":
            end = code.find("\n", i)
            end = n if end == -1 else end
            comments.extend(t.lower() for t in _WORD_RE.findall(code[i + 1 : end]))
            i = end
        elif ch in "'\"":
            i, ok = _skip_string(code, i)
            if not ok:
                skipped += 1
        elif ch.isdigit():
            i = _skip_number(code, i)
        elif ch.isalpha() or ch == "_":
            start = i
            while i < n and (code[i].isalnum() or code[i] == "_"):
                i += 1
            token = code[start:i]
            if i < n and code[i] in "'\"" and token.lower() in _STRING_PREFIXES:
                continue  # string prefix such as r"...", consumed with the literal
            if token in PYTHON_KEYWORDS:
                continue
            raw_identifiers.append(token)
            identifiers.extend(split_identifier(token))
        else:
            i += 1
    return CodeTokens(
        identifiers=tuple(identifiers),
        comments=tuple(comments),
        raw_identifiers=tuple(raw_identifiers),
        skipped_regions=skipped,
    )


def _skip_string(code: str, i: int) -> tuple[int, bool]:
    """Advance past the string literal starting at ``i``.

    Returns (next position, terminated). An unterminated single-quoted
    string consumes to end of line; an unterminated triple-quoted string
    consumes the rest of the input.
    """
    quote = code[i]
    n = len(code)
    if code[i : i + 3] == quote * 3:
        end = code.find(quote * 3, i + 3)
        if end == -1:
            return n, False
        return end + 3, True
    j = i + 1
    while j < n:
        if code[j] == "\\":
            j += 2
            continue
        if code[j] == quote:
            return j + 1, True
        if code[j] == "\n":
            return j, False
        j += 1
    return n, False


def _skip_number(code: str, i: int) -> int:
    n = len(code)
    while i < n and (code[i].isalnum() or code[i] in "._"):
        i += 1
    return i


def word_overlap(
    query: str, description: str, config: NlTokenConfig | None = None
) -> OverlapStats:
    """Unique-word overlap between a query and a description.

    ``absolute`` counts shared unique tokens after preprocessing;
    ``relative`` normalizes by the query's unique-token count, so it is not
    symmetric in its arguments.
    """
    q_unique = set(tokenize_natural(query, config))
    d_unique = set(tokenize_natural(description, config))
    absolute = len(q_unique & d_unique)
    if not q_unique:
        return OverlapStats(absolute=0, relative=None, query_unique=0)
    return OverlapStats(
        absolute=absolute,
        relative=absolute / len(q_unique),
        query_unique=len(q_unique),
    )


def load_collection(path: str | Path) -> SnippetCollection:
    """Load a snippet collection from a JSON-lines file.

    One object per line with keys ``id``, ``description``, ``code``,
    ``url`` (nullable) and ``tags``. Line order is preserved.
    """
    path = Path(path)
    snippets: list[AnnotatedSnippet] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: record is not an object")
            try:
                snippet = AnnotatedSnippet(
                    id=str(record["id"]),
                    description=str(record["description"]),
                    code=str(record["code"]),
                    url=record.get("url"),
                    tags=tuple(record.get("tags") or ()),
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing key {exc.args[0]!r}") from exc
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if snippet.id in seen:
                raise DataError(f"{path}:{lineno}: duplicate snippet id {snippet.id!r}")
            seen.add(snippet.id)
            snippets.append(snippet)
    if not snippets:
        logger.warning("loaded empty snippet collection from %s", path)
    return SnippetCollection(snippets=snippets, name=path.stem)


def save_collection(collection: SnippetCollection, path: str | Path) -> None:
    """Write a collection in the JSON-lines snippet format (UTF-8, LF)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for s in collection:
            record = {
                "id": s.id,
                "description": s.description,
                "code": s.code,
                "url": s.url,
                "tags": list(s.tags),
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")

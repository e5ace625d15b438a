"""Rule-table English suffix stemmer.

Deterministic suffix stripping in the classic five-step style. The suffix
rewrite rules live in ``data/stemmer_rules.txt`` so the exact behaviour is
pinned by a committed data file rather than by an external model. Steps 1b,
1c and 5 need control flow beyond suffix rewriting (vowel checks, measure
arithmetic, consonant undoubling) and are implemented here; their suffix
maps still come from the table.

Words of length two or less are returned unchanged.
"""

from __future__ import annotations

from functools import lru_cache
from importlib.resources import files

_VOWELS = frozenset("aeiou")


def _load_rules() -> dict[str, list[tuple[str, str, str]]]:
    text = (files("snipsearch") / "data" / "stemmer_rules.txt").read_text("utf-8")
    steps: dict[str, list[tuple[str, str, str]]] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        step, suffix, repl, cond = line.split("\t")
        steps.setdefault(step, []).append((suffix, "" if repl == "." else repl, cond))
    for rules in steps.values():
        rules.sort(key=lambda r: len(r[0]), reverse=True)
    return steps


_RULES = _load_rules()


def _is_consonant(word: str, i: int) -> bool:
    c = word[i]
    if c in _VOWELS:
        return False
    if c == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences in [C](VC){m}[V]."""
    m = 0
    prev_consonant = True
    for i in range(len(stem)):
        consonant = _is_consonant(stem, i)
        if consonant and not prev_consonant:
            m += 1
        prev_consonant = consonant
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(stem: str) -> bool:
    return (
        len(stem) >= 2
        and stem[-1] == stem[-2]
        and _is_consonant(stem, len(stem) - 1)
    )


def _ends_cvc(stem: str) -> bool:
    """Consonant-vowel-consonant ending where the last letter is not w, x, y."""
    return (
        len(stem) >= 3
        and _is_consonant(stem, len(stem) - 3)
        and not _is_consonant(stem, len(stem) - 2)
        and _is_consonant(stem, len(stem) - 1)
        and stem[-1] not in "wxy"
    )


def _condition_holds(cond: str, stem: str) -> bool:
    if cond == "-":
        return True
    if cond == "m>0":
        return _measure(stem) > 0
    if cond == "m>1":
        return _measure(stem) > 1
    if cond == "m>1&st":
        return _measure(stem) > 1 and stem[-1:] in ("s", "t")
    raise ValueError(f"unknown stemmer condition: {cond!r}")


def _table_step(word: str, step: str) -> str:
    # Longest matching suffix wins; a failed condition ends the step.
    for suffix, repl, cond in _RULES[step]:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if _condition_holds(cond, stem):
                return stem + repl
            return word
    return word


def _step1b(word: str) -> str:
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            return word[:-1]
        return word
    if word.endswith("ed") and _contains_vowel(word[:-2]):
        return _after_ed_ing(word[:-2])
    if word.endswith("ing") and _contains_vowel(word[:-3]):
        return _after_ed_ing(word[:-3])
    return word


def _after_ed_ing(stem: str) -> str:
    for suffix, repl, _ in _RULES["1b2"]:
        if stem.endswith(suffix):
            return stem[: len(stem) - len(suffix)] + repl
    if _ends_double_consonant(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _step1c(word: str) -> str:
    if word.endswith("y") and _contains_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


def _step5a(word: str) -> str:
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
    return word


def _step5b(word: str) -> str:
    if word.endswith("ll") and _measure(word[:-1]) > 1:
        return word[:-1]
    return word


def _one_pass(word: str) -> str:
    if len(word) <= 2:
        return word
    word = _table_step(word, "1a")
    word = _step1b(word)
    word = _step1c(word)
    word = _table_step(word, "2")
    word = _table_step(word, "3")
    word = _table_step(word, "4")
    word = _step5a(word)
    word = _step5b(word)
    return word


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Stem a single lowercase word.

    Passes are applied until a fixpoint so that stemming is idempotent:
    a single pass can expose a new strippable suffix (e.g. a trailing "s"
    uncovered by dropping a final "e").
    """
    for _ in range(10):
        stemmed = _one_pass(word)
        if stemmed == word:
            return word
        word = stemmed
    return word

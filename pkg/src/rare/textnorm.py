"""String normalization used by containment gates and answer matching.

Two levels are provided. :func:`fold` keeps punctuation and is used wherever
the question is "does this passage literally contain that phrase"
(answer gates, answer masking, availability). :func:`normalize_answer` is the
aggressive form used by the answer matcher, which also drops punctuation.
"""

from __future__ import annotations

import re
import unicodedata

_WS = re.compile(r"\s+")
# punctuation between two digits (94.8, 3,818.1) is kept
_PUNCT = re.compile(r"(?<!\d)[^\w\s]|[^\w\s](?!\d)")
_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+(?=[\"'(\[A-Z0-9$])|\n+")


def collapse_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def fold(text: str) -> str:
    """NFKC + casefold + whitespace collapse."""
    return collapse_ws(unicodedata.normalize("NFKC", text).casefold())


def contains(haystack: str, needle: str) -> bool:
    """Folded substring test. An empty needle is never contained."""
    n = fold(needle)
    return bool(n) and n in fold(haystack)


def normalize_answer(text: str) -> str:
    text = unicodedata.normalize("NFKC", text).casefold()
    text = text.replace("_", " ")
    text = _PUNCT.sub(" ", text)
    return collapse_ws(text)


def entity_key(name: str) -> str:
    return fold(name)


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENT_SPLIT.split(text) if s and s.strip()]


def flexible_pattern(phrase: str) -> re.Pattern[str]:
    """Case-insensitive regex for ``phrase`` tolerant to whitespace runs."""
    parts = [re.escape(p) for p in phrase.split()]
    return re.compile(r"\s+".join(parts), re.IGNORECASE)

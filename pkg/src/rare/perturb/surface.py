"""Seeded character- and word-level query perturbations.

Tokens are whitespace-delimited; leading/trailing punctuation is peeled off
and only the alphabetic core is edited. Numerals, tokens shorter than four
letters and tokens shared with the protected strings (usually the answer)
are never touched.
"""

from __future__ import annotations

import math
import random
import re
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from ..errors import NoPerturbableToken
from ..io import from_dict

QUERY_KINDS = ("original", "char_level", "word_level", "grammar", "irrelevant_info")
CHAR_RATE = 0.05
MIN_TOKEN_LEN = 4

_SPLIT = re.compile(r"(\s+)")
_CORE = re.compile(r"^(\W*)(.*?)(\W*)$", re.S)
_WORD = re.compile(r"\w+")

_ROWS = ["qwertyuiop", "asdfghjkl", "zxcvbnm"]


def _keyboard_neighbors() -> dict[str, str]:
    pos = {ch: (r, c) for r, row in enumerate(_ROWS) for c, ch in enumerate(row)}
    out = {}
    for ch, (r, c) in pos.items():
        near = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if (dr, dc) == (0, 0):
                    continue
                rr, cc = r + dr, c + dc
                if 0 <= rr < len(_ROWS) and 0 <= cc < len(_ROWS[rr]):
                    near.append(_ROWS[rr][cc])
        out[ch] = "".join(near)
    return out


KEYBOARD = _keyboard_neighbors()


@dataclass
class QueryVariant:
    qa_id: str
    kind: str
    text: str
    seed: int = 0

    def __post_init__(self):
        if self.kind not in QUERY_KINDS:
            raise ValueError(f"unknown query variant kind {self.kind!r}")
        if not self.text.strip():
            raise ValueError("variant text is empty")

    @classmethod
    def from_dict(cls, row: dict) -> "QueryVariant":
        return from_dict(cls, row)


def protected_terms(question: str, protected: Iterable[str] = ()) -> set[str]:
    """Casefolded word forms that must survive perturbation."""
    terms = {w.casefold() for w in _WORD.findall(question) if any(ch.isdigit() for ch in w)}
    for phrase in protected:
        terms.update(w.casefold() for w in _WORD.findall(phrase or ""))
    return terms


def numerals(text: str) -> list[str]:
    """Whitespace tokens carrying a digit, with outer punctuation stripped."""
    out = []
    for tok in text.split():
        core = _CORE.match(tok).group(2)
        if any(ch.isdigit() for ch in core):
            out.append(core)
    return out


def _split(text: str) -> list[str]:
    return _SPLIT.split(text)


def _peel(token: str) -> tuple[str, str, str]:
    m = _CORE.match(token)
    return m.group(1), m.group(2), m.group(3)


def _perturbable(core: str, protected: set[str]) -> bool:
    return len(core) >= MIN_TOKEN_LEN and core.isalpha() and core.casefold() not in protected


def _candidates(parts: Sequence[str], protected: set[str]) -> list[int]:
    return [i for i in range(0, len(parts), 2) if _perturbable(_peel(parts[i])[1], protected)]


def _match_case(src: str, ch: str) -> str:
    return ch.upper() if src.isupper() else ch


def _char_edit(core: str, op: str, rng: random.Random) -> str:
    if op == "swap" and len(core) >= 2:
        pairs = [i for i in range(len(core) - 1) if core[i] != core[i + 1]] or [0]
        i = rng.choice(pairs)
        return core[:i] + core[i + 1] + core[i] + core[i + 2 :]
    if op == "delete" and len(core) >= 2:
        i = rng.randrange(len(core))
        return core[:i] + core[i + 1 :]
    if op == "insert":
        i = rng.randrange(len(core) + 1)
        anchor = core[min(i, len(core) - 1)]
        pool = KEYBOARD.get(anchor.lower(), string.ascii_lowercase)
        return core[:i] + _match_case(anchor, rng.choice(pool)) + core[i:]
    # keyboard-neighbor substitution
    i = rng.randrange(len(core))
    pool = KEYBOARD.get(core[i].lower(), string.ascii_lowercase)
    return core[:i] + _match_case(core[i], rng.choice(pool)) + core[i + 1 :]


CHAR_OPS = ("swap", "delete", "insert", "substitute")


def perturb_char(q: str, seed: int, qa_id: str = "", protected: Iterable[str] = ()) -> QueryVariant:
    """``max(1, ceil(5% of characters))`` single-character edits on unprotected tokens."""
    prot = protected_terms(q, protected)
    parts = _split(q)
    cands = _candidates(parts, prot)
    if not cands:
        raise NoPerturbableToken(q)
    k = max(1, math.ceil(CHAR_RATE * len(q)))
    rng = random.Random(f"char|{seed}|{q}")
    for _ in range(16):
        edited = list(parts)
        for _ in range(k):
            i = rng.choice(cands)
            pre, core, post = _peel(edited[i])
            edited[i] = pre + _char_edit(core, rng.choice(CHAR_OPS), rng) + post
        text = "".join(edited)
        # edits can cancel out (e.g. swap then swap back)
        if text != q and text.strip():
            return QueryVariant(qa_id, "char_level", text, seed)
    raise NoPerturbableToken(f"could not produce a distinct variant of {q!r}")


Lexicon = Mapping[str, Sequence[str]]


def load_lexicon(path: Optional[Path] = None) -> dict[str, list[str]]:
    """Read ``word<TAB>syn1|syn2`` lines; the packaged lexicon when ``path`` is None."""
    if path is None:
        text = resources.files("rare").joinpath("data/lexicon.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    lex: dict[str, list[str]] = {}
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        word, _, rest = line.partition("\t")
        syns = [s.strip() for s in re.split(r"[|\t]", rest) if s.strip()]
        # a replacement may add at most one token
        syns = [s for s in syns if len(s.split()) <= 2 and s.casefold() != word.strip().casefold()]
        if syns:
            lex.setdefault(word.strip().casefold(), []).extend(syns)
    return lex


def _typo(core: str, rng: random.Random) -> str:
    i = rng.randrange(1, len(core) - 1)
    return core[:i] + core[i + 1 :]


def _with_case(src: str, repl: str) -> str:
    if src.isupper():
        return repl.upper()
    if src[:1].isupper():
        return repl[:1].upper() + repl[1:]
    return repl


def perturb_word(
    q: str,
    seed: int,
    lexicon: Lexicon,
    qa_id: str = "",
    protected: Iterable[str] = (),
) -> QueryVariant:
    """Swap 1-2 tokens for lexicon synonyms; with no synonym available, drop a letter instead."""
    prot = protected_terms(q, protected)
    parts = _split(q)
    cands = _candidates(parts, prot)
    if not cands:
        raise NoPerturbableToken(q)
    rng = random.Random(f"word|{seed}|{q}")
    with_syn = [i for i in cands if _peel(parts[i])[1].casefold() in lexicon]
    pool = with_syn or cands
    chosen = sorted(rng.sample(pool, min(len(pool), rng.choice((1, 2)))))
    for i in chosen:
        pre, core, post = _peel(parts[i])
        if with_syn:
            repl = _with_case(core, rng.choice(list(lexicon[core.casefold()])))
        else:
            repl = _typo(core, rng)
        parts[i] = pre + repl + post
    return QueryVariant(qa_id, "word_level", "".join(parts), seed)

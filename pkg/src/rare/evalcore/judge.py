"""Answer matching, refusal detection and the robustness decision table.

The decision for one generated answer, given whether the generator already
answered correctly with no context (``closed_book_correct``) and whether the
supplied context contains the answer (``answer_available``):

    closed-book correct              -> must match the reference
    closed-book wrong, answerable    -> must match the reference
    closed-book wrong, unanswerable  -> must refuse (strict)
                                        or refuse / match (lenient)
"""

from __future__ import annotations

import logging
import threading
from typing import Iterable, Optional

from ..errors import RareError
from ..prompts import REFUSAL
from ..providers import ProviderClient, cosine
from ..textnorm import normalize_answer

log = logging.getLogger(__name__)

EMBED_THRESHOLD = 0.9
MODES = ("strict", "lenient")


def is_refusal(pred: str, phrases: Iterable[str] = ()) -> bool:
    norm = normalize_answer(pred or "")
    if not norm:
        return False
    return any(p and p in norm for p in map(normalize_answer, (REFUSAL, *phrases)))


def lexical_match(pred: str, ref: str) -> bool:
    p, r = normalize_answer(pred or ""), normalize_answer(ref or "")
    if not p or not r:
        return False
    return p == r or p in r or r in p


class AnswerMatcher:
    """Two-stage evaluator: normalized exact/substring match, then embedding cosine."""

    def __init__(
        self,
        client: Optional[ProviderClient] = None,
        model: Optional[str] = None,
        threshold: float = EMBED_THRESHOLD,
    ):
        self.client = client
        self.model = model
        self.threshold = threshold
        self.errors = 0
        self._lock = threading.Lock()

    def __call__(self, pred: str, ref: str) -> tuple[bool, str]:
        if lexical_match(pred, ref):
            return True, "exact_substring"
        if self.client is None or not (pred or "").strip() or not (ref or "").strip():
            return False, "none"
        try:
            a, b = self.client.embed(self.model, [pred, ref])
        except RareError as exc:
            with self._lock:
                self.errors += 1
            log.warning("embedding stage failed, counting as unmatched: %s", exc)
            return False, "none"
        if cosine(a.values, b.values) > self.threshold:
            return True, "embedding"
        return False, "none"


def decide(matched: bool, refused: bool, answer_available: bool, closed_book_correct: bool, mode: str = "strict") -> int:
    if mode not in MODES:
        raise ValueError(f"judge mode must be one of {MODES}")
    matched = matched and not refused
    if closed_book_correct or answer_available:
        return int(matched)
    if mode == "lenient":
        return int(refused or matched)
    return int(refused)


def judge(
    pred: str,
    ref: str,
    answer_available: bool,
    closed_book_correct: bool,
    matcher: Optional[AnswerMatcher] = None,
    mode: str = "strict",
    refusal_phrases: Iterable[str] = (),
) -> int:
    refused = is_refusal(pred, refusal_phrases)
    matched = False if refused else (matcher or AnswerMatcher())(pred, ref)[0]
    return decide(matched, refused, answer_available, closed_book_correct, mode)

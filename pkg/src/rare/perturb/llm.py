"""LLM rewrites of queries (grammar change, irrelevant-info addition)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .. import prompts
from ..errors import GuardFailed
from ..providers import ChatRequest, ProviderClient, cosine
from ..textnorm import contains, split_sentences
from .surface import QueryVariant, numerals

log = logging.getLogger(__name__)

DEFAULT_TAU_Q = 0.85
DEFAULT_TAU_D = 0.85


@dataclass
class SimilarityGuard:
    """Embedding-cosine check shared by query and document guards."""

    client: ProviderClient
    model: str
    threshold: float = DEFAULT_TAU_Q

    def similarity(self, a: str, b: str) -> float:
        va, vb = self.client.embed(self.model, [a, b])
        return cosine(va.values, vb.values)

    def best_match(self, sentence: str, text: str) -> float:
        candidates = split_sentences(text)
        if not candidates:
            return 0.0
        vecs = self.client.embed(self.model, [sentence] + candidates)
        return max(cosine(vecs[0].values, v.values) for v in vecs[1:])


def missing_protected(original: str, variant: str, protected: Iterable[str] = ()) -> list[str]:
    # protected strings only bind when the original actually contains them
    required = numerals(original) + [p for p in protected if p and contains(original, p)]
    return [p for p in required if not contains(variant, p)]


def _clean(raw: str) -> str:
    text = raw.strip().strip('"').strip()
    if text.lower().startswith("question:"):
        text = text[len("question:") :].strip()
    return text


def perturb_llm(
    q: str,
    kind: str,
    client: ProviderClient,
    model: str,
    guard: SimilarityGuard,
    qa_id: str = "",
    seed: int = 0,
    protected: Sequence[str] = (),
) -> QueryVariant:
    """Rewrite ``q`` and keep the result only if it passes the meaning guard (one retry)."""
    if kind == "grammar":
        system = prompts.GRAMMAR_SYSTEM
    elif kind == "irrelevant_info":
        system = prompts.IRRELEVANT_SYSTEM
    else:
        raise ValueError(f"not an LLM perturbation kind: {kind!r}")

    reasons = []
    for attempt in range(2):
        req = ChatRequest(model=model, system_prompt=system, user_prompt=prompts.rewrite_user(q, attempt))
        text = _clean(client.chat(req).text)
        if not text:
            reasons.append("empty rewrite")
            continue
        lost = missing_protected(q, text, protected)
        if lost:
            reasons.append(f"dropped protected strings {lost}")
            continue
        sim = guard.similarity(q, text)
        if sim < guard.threshold:
            reasons.append(f"similarity {sim:.3f} < {guard.threshold}")
            continue
        return QueryVariant(qa_id, kind, text, seed)
    log.warning("%s variant of %s omitted: %s", kind, qa_id or q[:40], "; ".join(reasons))
    raise GuardFailed(f"{kind}: " + "; ".join(reasons))

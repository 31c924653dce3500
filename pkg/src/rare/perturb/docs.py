"""Ground-truth document perturbations: answer removal and back-translation."""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .. import prompts
from ..errors import ChunkBecameEmpty, EvidenceNotFound, GuardFailed
from ..ingest import Chunk
from ..io import from_dict
from ..providers import ChatRequest, ProviderClient
from ..qagen import QAPair
from ..textnorm import contains, flexible_pattern
from .llm import SimilarityGuard

log = logging.getLogger(__name__)

DOC_KINDS = ("ground_truth", "answer_removed", "back_translated")
MASK = "[...]"
DEFAULT_PIVOT_LANGUAGE = "German"


@dataclass
class DocVariant:
    qa_id: str
    kind: str
    chunks: list[list[str]] = field(default_factory=list)
    answer_available: bool = True

    def __post_init__(self):
        if self.kind not in DOC_KINDS:
            raise ValueError(f"unknown document variant kind {self.kind!r}")

    @property
    def texts(self) -> list[str]:
        return [text for _, text in self.chunks]

    @classmethod
    def from_dict(cls, row: dict) -> "DocVariant":
        return from_dict(cls, row)


def ground_truth_variant(qa: QAPair, gt_chunks: Mapping[str, Chunk]) -> DocVariant:
    return DocVariant(qa.qa_id, "ground_truth", [[c, gt_chunks[c].text] for c in qa.gt_chunk_ids], True)


def _tidy(text: str) -> str:
    text = re.sub(r"[ \t]{2,}", " ", text)
    text = re.sub(r" +([.,;:])", r"\1", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip()


def mask_answer(text: str, answer: str) -> str:
    pattern = flexible_pattern(answer)
    text = pattern.sub(MASK, text)
    if contains(text, answer):
        # casefold-only equivalences (e.g. German sharp s) escape IGNORECASE
        raise GuardFailed(f"could not mask answer {answer!r}")
    return text


def perturb_doc_remove_answer(qa: QAPair, gt_chunks: Mapping[str, Chunk]) -> DocVariant:
    """Delete every evidence sentence from the ground-truth chunks and mask leftovers of the answer."""
    sentences = [s for _, s in qa.evidence]
    out = []
    for cid in qa.gt_chunk_ids:
        text = unicodedata.normalize("NFKC", gt_chunks[cid].text)
        for owner, sentence in qa.evidence:
            pattern = flexible_pattern(unicodedata.normalize("NFKC", sentence))
            if owner == cid and not pattern.search(text):
                raise EvidenceNotFound(f"{qa.qa_id}: evidence sentence not in {cid}")
        for sentence in sentences:
            text = flexible_pattern(unicodedata.normalize("NFKC", sentence)).sub("", text)
        text = _tidy(mask_answer(text, qa.answer))
        if not text or not re.search(r"\w", text.replace(MASK, "")):
            raise ChunkBecameEmpty(f"{qa.qa_id}: {cid} is empty after removing the answer")
        out.append([cid, text])
    return DocVariant(qa.qa_id, "answer_removed", out, answer_available=False)


def chunk_guard(qa: QAPair, chunk_id: str, text: str, guard: SimilarityGuard) -> bool:
    """Answer recoverable from a rewritten chunk: the answer string survives, or
    every evidence sentence of this chunk still has a close match."""
    if contains(text, qa.answer):
        return True
    own = [s for c, s in qa.evidence if c == chunk_id]
    if not own:
        return False
    return all(guard.best_match(s, text) >= guard.threshold for s in own)


def _translate(client: ProviderClient, model: str, text: str, target: str, attempt: int) -> str:
    req = ChatRequest(model, prompts.translate_system(target), prompts.translate_user(text, attempt))
    return client.chat(req).text.strip()


def perturb_doc_backtranslate(
    qa: QAPair,
    gt_chunks: Mapping[str, Chunk],
    client: ProviderClient,
    model: str,
    guard: SimilarityGuard,
    pivot_language: str = DEFAULT_PIVOT_LANGUAGE,
    retries: int = 2,
    source_language: str = "English",
) -> DocVariant:
    """Round-trip each chunk through ``pivot_language``; fall back to a constrained paraphrase."""
    out = []
    for cid in qa.gt_chunk_ids:
        source = gt_chunks[cid].text
        result: Optional[str] = None
        for attempt in range(1 + retries):
            there = _translate(client, model, source, pivot_language, attempt)
            back = _translate(client, model, there, source_language, attempt)
            if back and chunk_guard(qa, cid, back, guard):
                result = back
                break
        if result is None:
            req = ChatRequest(model, prompts.paraphrase_system(qa.answer), prompts.translate_user(source))
            para = client.chat(req).text.strip()
            if para and chunk_guard(qa, cid, para, guard):
                result = para
        if result is None:
            log.warning("back-translation of %s for %s failed its guard", cid, qa.qa_id)
            raise GuardFailed(f"{qa.qa_id}: back-translation lost the answer in {cid}")
        out.append([cid, result])
    return DocVariant(qa.qa_id, "back_translated", out, answer_available=True)

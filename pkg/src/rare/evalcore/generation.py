from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .. import prompts
from ..errors import NoJsonFound
from ..io import from_dict
from ..providers import ChatRequest, ProviderClient, extract_json

CLOSED_BOOK = "closed_book"

_ANSWER_LINE = re.compile(r"^\s*\**\s*answer\s*\**\s*:\s*(.+?)\s*$", re.I | re.M)
_COT_LINE = re.compile(r"^\s*\**\s*cot_answer\s*\**\s*:\s*(.+?)\s*$", re.I | re.M)


@dataclass
class GenerationRecord:
    qa_id: str
    query_kind: str
    doc_kind: str
    context_chunk_ids: list[str] = field(default_factory=list)
    cot_answer: str = ""
    answer: str = ""
    generator_model: str = ""
    parse_failed: bool = False
    error: Optional[str] = None

    @classmethod
    def from_dict(cls, row: dict) -> "GenerationRecord":
        return from_dict(cls, row)


def parse_generation(raw: str) -> tuple[str, str, bool]:
    """Return ``(cot_answer, answer, parse_failed)``; unparseable text becomes the answer."""
    try:
        obj = extract_json(raw)
        if isinstance(obj, dict) and "answer" in obj:
            return str(obj.get("cot_answer") or ""), str(obj["answer"]).strip(), False
    except NoJsonFound:
        pass
    answers = _ANSWER_LINE.findall(raw or "")
    if answers:
        cot = _COT_LINE.findall(raw)
        return (cot[0] if cot else ""), answers[-1].strip().strip('"'), False
    return "", (raw or "").strip(), True


class RAGGenerator:
    """The system under test: question + contexts -> short answer."""

    def __init__(self, client: ProviderClient, model: str, max_tokens: int = 1024, temperature: float = 0.0):
        self.client = client
        self.model = model
        self.max_tokens = max_tokens
        self.temperature = temperature

    def generate_answer(
        self,
        question: str,
        contexts: Sequence[tuple[str, str]],
        domain: str,
        qa_id: str = "",
        query_kind: str = "original",
        doc_kind: str = CLOSED_BOOK,
    ) -> GenerationRecord:
        system = prompts.generator_system(domain) if contexts else prompts.closed_book_system(domain)
        req = ChatRequest(
            model=self.model,
            system_prompt=system,
            user_prompt=prompts.generator_user(question, [text for _, text in contexts]),
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )
        cot, answer, failed = parse_generation(self.client.chat(req).text)
        return GenerationRecord(
            qa_id=qa_id,
            query_kind=query_kind,
            doc_kind=doc_kind,
            context_chunk_ids=[cid for cid, _ in contexts],
            cot_answer=cot,
            answer=answer,
            generator_model=self.model,
            parse_failed=failed,
        )

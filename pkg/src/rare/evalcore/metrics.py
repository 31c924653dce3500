"""The four robustness scores over judged verdicts of one QA pair.

All four are plain means of the binary judge value over a fixed set of
(query variant, document variant) cells:

* overall:   every query kind x {ground_truth, answer_removed, back_translated}
* query:     perturbed query kinds x ground_truth
* document:  original query x {answer_removed, back_translated}
* retrieval: original query x one top-k context per embedding model
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from ..errors import IncompleteGrid
from ..io import from_dict

QUERY_KINDS = ("original", "char_level", "word_level", "grammar", "irrelevant_info")
PERTURBED_QUERY_KINDS = QUERY_KINDS[1:]
DOC_KINDS = ("ground_truth", "answer_removed", "back_translated")
PERTURBED_DOC_KINDS = DOC_KINDS[1:]
RETRIEVAL_PREFIX = "retrieval:"
METRICS = ("overall", "query", "document", "retrieval")


@dataclass
class JudgeVerdict:
    qa_id: str
    query_kind: str
    doc_kind: str
    matched: bool
    refused: bool
    answer_available: bool
    closed_book_correct: bool
    f: int
    match_stage: str = "none"
    f_lenient: Optional[int] = None
    generator: str = ""

    def __post_init__(self):
        if self.refused and self.matched:
            raise ValueError("a refusal cannot also be a match")
        if self.f not in (0, 1):
            raise ValueError("f must be 0 or 1")

    @classmethod
    def from_dict(cls, row: dict) -> "JudgeVerdict":
        return from_dict(cls, row)


def _grid(verdicts: Iterable[JudgeVerdict], field: str) -> dict[tuple[str, str], int]:
    grid: dict[tuple[str, str], int] = {}
    for v in verdicts:
        value = getattr(v, field)
        if value is None:
            raise ValueError(f"verdict {v.qa_id}/{v.query_kind}/{v.doc_kind} has no {field}")
        grid[(v.query_kind, v.doc_kind)] = int(value)
    return grid


def _mean(grid: dict[tuple[str, str], int], cells: Sequence[tuple[str, str]]) -> float:
    missing = [c for c in cells if c not in grid]
    if missing or not cells:
        raise IncompleteGrid(f"missing cells: {missing or 'no cells requested'}")
    return sum(grid[c] for c in cells) / len(cells)


def retrieval_kinds(verdicts: Iterable[JudgeVerdict]) -> list[str]:
    return sorted({v.doc_kind for v in verdicts if v.doc_kind.startswith(RETRIEVAL_PREFIX)})


def overall_robustness(
    verdicts: Sequence[JudgeVerdict],
    query_kinds: Sequence[str] = QUERY_KINDS,
    doc_kinds: Sequence[str] = DOC_KINDS,
    include_retrieval: bool = False,
    field: str = "f",
) -> float:
    docs = list(doc_kinds) + (retrieval_kinds(verdicts) if include_retrieval else [])
    return _mean(_grid(verdicts, field), [(q, d) for q in query_kinds for d in docs])


def query_robustness(
    verdicts: Sequence[JudgeVerdict],
    query_kinds: Sequence[str] = PERTURBED_QUERY_KINDS,
    include_original: bool = False,
    field: str = "f",
) -> float:
    kinds = (["original"] if include_original else []) + [k for k in query_kinds if k != "original"]
    return _mean(_grid(verdicts, field), [(q, "ground_truth") for q in kinds])


def document_robustness(
    verdicts: Sequence[JudgeVerdict],
    doc_kinds: Sequence[str] = PERTURBED_DOC_KINDS,
    field: str = "f",
) -> float:
    return _mean(_grid(verdicts, field), [("original", d) for d in doc_kinds])


def retrieval_robustness(
    verdicts: Sequence[JudgeVerdict],
    models: Optional[Sequence[str]] = None,
    field: str = "f",
) -> float:
    kinds = [RETRIEVAL_PREFIX + m for m in models] if models is not None else retrieval_kinds(verdicts)
    return _mean(_grid(verdicts, field), [("original", d) for d in kinds])

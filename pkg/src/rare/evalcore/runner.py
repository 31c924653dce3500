"""Run one generator over the perturbation grid and judge every answer."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from ..errors import RareError
from ..ingest import Chunk
from ..perturb import DocVariant, QueryVariant
from ..qagen import QAPair
from ..retrieval import RetrievalSet
from .generation import CLOSED_BOOK, GenerationRecord, RAGGenerator
from .judge import AnswerMatcher, decide, is_refusal
from .metrics import DOC_KINDS, QUERY_KINDS, RETRIEVAL_PREFIX, JudgeVerdict

log = logging.getLogger(__name__)

Retriever = Callable[[QAPair, str, str], RetrievalSet]


@dataclass
class EvalSettings:
    mode: str = "strict"
    refusal_phrases: tuple[str, ...] = ()
    workers: int = 8
    # also run retrieval contexts for every query variant (for folding into overall)
    fold_retrieval: bool = False


@dataclass
class _Cell:
    qa: QAPair
    query_kind: str
    query_text: str
    doc_kind: str
    contexts: list[tuple[str, str]]
    answer_available: bool


def grade(
    record: GenerationRecord,
    qa: QAPair,
    answer_available: bool,
    closed_book_correct: bool,
    matcher: AnswerMatcher,
    settings: EvalSettings,
) -> JudgeVerdict:
    refused = is_refusal(record.answer, settings.refusal_phrases)
    matched, stage = (False, "none") if refused else matcher(record.answer, qa.answer)
    return JudgeVerdict(
        qa_id=qa.qa_id,
        query_kind=record.query_kind,
        doc_kind=record.doc_kind,
        matched=matched,
        refused=refused,
        answer_available=answer_available,
        closed_book_correct=closed_book_correct,
        f=decide(matched, refused, answer_available, closed_book_correct, settings.mode),
        match_stage=stage,
        f_lenient=decide(matched, refused, answer_available, closed_book_correct, "lenient"),
        generator=record.generator_model,
    )


def _run(generator: RAGGenerator, cell: _Cell) -> GenerationRecord:
    try:
        return generator.generate_answer(
            cell.query_text, cell.contexts, cell.qa.domain, cell.qa.qa_id, cell.query_kind, cell.doc_kind
        )
    except RareError as exc:
        log.warning("generation failed for %s %s/%s: %s", cell.qa.qa_id, cell.query_kind, cell.doc_kind, exc)
        return GenerationRecord(
            cell.qa.qa_id, cell.query_kind, cell.doc_kind, [c for c, _ in cell.contexts],
            generator_model=generator.model, error=str(exc),
        )


def _rank(order: Sequence[str]):
    return lambda k: (order.index(k) if k in order else len(order), k)


def build_cells(
    qa: QAPair,
    query_variants: Mapping[str, QueryVariant],
    doc_variants: Mapping[str, DocVariant],
    retrieval_sets: Sequence[RetrievalSet],
    chunks: Mapping[str, Chunk],
    retriever: Optional[Retriever] = None,
    fold_retrieval: bool = False,
) -> list[_Cell]:
    qkinds = sorted(query_variants, key=_rank(QUERY_KINDS))
    dkinds = sorted(doc_variants, key=_rank(DOC_KINDS))
    cells = []
    for qkind in qkinds:
        qv = query_variants[qkind]
        for dkind in dkinds:
            dv = doc_variants[dkind]
            cells.append(_Cell(qa, qkind, qv.text, dkind, [(c, t) for c, t in dv.chunks], dv.answer_available))
    original = query_variants.get("original")
    if original is None:
        return cells
    for rs in retrieval_sets:
        ctx = [(c, chunks[c].text) for c in rs.chunk_ids]
        cells.append(_Cell(qa, "original", original.text, RETRIEVAL_PREFIX + rs.model, ctx, rs.answer_available))
    if fold_retrieval and retriever is not None:
        for qkind in qkinds:
            if qkind == "original":
                continue
            qv = query_variants[qkind]
            for rs in retrieval_sets:
                got = retriever(qa, qv.text, rs.model)
                ctx = [(c, chunks[c].text) for c in got.chunk_ids]
                cells.append(_Cell(qa, qkind, qv.text, RETRIEVAL_PREFIX + rs.model, ctx, got.answer_available))
    return cells


def evaluate(
    generator: RAGGenerator,
    matcher: AnswerMatcher,
    qas: Sequence[QAPair],
    query_variants: Mapping[str, Mapping[str, QueryVariant]],
    doc_variants: Mapping[str, Mapping[str, DocVariant]],
    retrieval_sets: Mapping[str, Sequence[RetrievalSet]],
    chunks: Mapping[str, Chunk],
    settings: Optional[EvalSettings] = None,
    retriever: Optional[Retriever] = None,
) -> tuple[list[GenerationRecord], list[JudgeVerdict]]:
    """Closed-book pass first (once per QA), then every grid cell.

    Cells whose generation failed are recorded but not judged.
    """
    settings = settings or EvalSettings()
    workers = max(1, settings.workers)

    closed = [_Cell(qa, "original", qa.question, CLOSED_BOOK, [], False) for qa in qas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        cb_records = list(pool.map(lambda c: _run(generator, c), closed))
    cb_correct = {}
    for qa, rec in zip(qas, cb_records):
        ok = rec.error is None and not is_refusal(rec.answer, settings.refusal_phrases)
        cb_correct[qa.qa_id] = ok and matcher(rec.answer, qa.answer)[0]

    cells: list[_Cell] = []
    for qa in qas:
        cells += build_cells(
            qa,
            query_variants.get(qa.qa_id, {}),
            doc_variants.get(qa.qa_id, {}),
            retrieval_sets.get(qa.qa_id, []),
            chunks,
            retriever,
            settings.fold_retrieval,
        )
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(lambda c: _run(generator, c), cells))

    verdicts = [
        grade(rec, cell.qa, cell.answer_available, cb_correct[cell.qa.qa_id], matcher, settings)
        for cell, rec in zip(cells, records)
        if rec.error is None
    ]
    return cb_records + records, verdicts

"""QA pair synthesis from pattern instances, LLM quality gate, train/test split."""

from __future__ import annotations

import hashlib
import json
import logging
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from . import prompts
from .errors import NoJsonFound
from .ingest import Chunk, domain_of_chunk
from .io import from_dict
from .patterns import MULTI_HOP, PatternInstance
from .providers import ChatRequest, ProviderClient, extract_json
from .textnorm import contains

log = logging.getLogger(__name__)

META_FIELDS = ("title", "year", "country", "company", "file_type")
DEFAULT_THRESHOLD = 3


@dataclass
class QAPair:
    qa_id: str
    question: str
    answer: str
    kind: str
    gt_chunk_ids: list[str]
    domain: str
    meta: dict = field(default_factory=dict)
    pivot_entity: Optional[str] = None
    # (chunk_id, source_sentence) for every triplet behind the pair
    evidence: list[list[str]] = field(default_factory=list)
    answer_in_context: bool = True

    @property
    def multi_hop(self) -> bool:
        return self.kind in MULTI_HOP

    @classmethod
    def from_dict(cls, row: dict) -> "QAPair":
        return from_dict(cls, row)


@dataclass
class QualityScores:
    clarity: int
    correctness: int
    reasonableness: Optional[int] = None

    def values(self) -> list[int]:
        dims = [self.clarity, self.correctness]
        if self.reasonableness is not None:
            dims.insert(0, self.reasonableness)
        return dims


@dataclass
class BenchmarkSplit:
    train: list[str]
    test: list[str]


def make_qa_id(kind: str, gt_chunk_ids: Sequence[str], question: str) -> str:
    blob = json.dumps([kind, sorted(gt_chunk_ids), question], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def meta_subset(meta) -> dict:
    src = meta if isinstance(meta, dict) else meta.__dict__
    return {k: src.get(k) for k in META_FIELDS if src.get(k) not in (None, "")}


def _parse_pair(raw: str) -> Optional[tuple[str, str]]:
    try:
        obj = extract_json(raw)
    except NoJsonFound:
        log.warning("QA generator returned no JSON")
        return None
    if not isinstance(obj, dict):
        return None
    q = str(obj.get("question") or "").strip()
    a = str(obj.get("answer") or "").strip()
    if not q or not a:
        return None
    return q, a


def _evidence(inst: PatternInstance) -> list[list[str]]:
    return [[t.answer_chunk_id, t.source_sentence] for t in inst.triplets]


def generate_single_hop(
    inst: PatternInstance,
    chunk: Chunk,
    meta,
    client: ProviderClient,
    model: str,
) -> Optional[QAPair]:
    if inst.kind != "single_hop":
        raise ValueError(f"expected a single_hop instance, got {inst.kind}")
    t = inst.triplets[0]
    domain = domain_of_chunk(chunk.chunk_id)
    meta = meta_subset(meta)
    req = ChatRequest(
        model=model,
        system_prompt=prompts.single_hop_system(domain),
        user_prompt=prompts.single_hop_user(
            {"entity_1": t.entity_1, "relation": t.relation, "entity_2": t.entity_2}, chunk.text, meta
        ),
    )
    parsed = _parse_pair(client.chat(req).text)
    if parsed is None:
        return None
    question, answer = parsed
    if not contains(chunk.text, answer):
        log.info("rejecting single-hop pair: answer %r not in %s", answer, chunk.chunk_id)
        return None
    if contains(question, answer):
        log.info("rejecting single-hop pair: question gives away the answer")
        return None
    gt = [chunk.chunk_id]
    return QAPair(
        qa_id=make_qa_id(inst.kind, gt, question),
        question=question,
        answer=answer,
        kind=inst.kind,
        gt_chunk_ids=gt,
        domain=domain,
        meta=meta,
        evidence=_evidence(inst),
        answer_in_context=True,
    )


def generate_multi_hop(
    inst: PatternInstance,
    chunks: Mapping[str, Chunk],
    meta,
    client: ProviderClient,
    model: str,
) -> Optional[QAPair]:
    if inst.kind not in MULTI_HOP:
        raise ValueError(f"expected a multi-hop instance, got {inst.kind}")
    gt = list(inst.chunk_ids)
    meta = meta_subset(meta)
    triplets = [{"entity_1": t.entity_1, "relation": t.relation, "entity_2": t.entity_2} for t in inst.triplets]
    req = ChatRequest(
        model=model,
        system_prompt=prompts.multi_hop_system(),
        user_prompt=prompts.multi_hop_user(
            inst.kind, inst.pivot_entity or "", triplets, [(cid, chunks[cid].text) for cid in gt], meta
        ),
    )
    parsed = _parse_pair(client.chat(req).text)
    if parsed is None:
        return None
    question, answer = parsed
    pivot = inst.pivot_entity or ""
    if contains(question, answer):
        log.info("rejecting multi-hop pair: question gives away the answer")
        return None
    if pivot and contains(question, pivot):
        log.info("rejecting multi-hop pair: pivot %r named directly", pivot)
        return None
    joined = "\n".join(chunks[cid].text for cid in gt)
    return QAPair(
        qa_id=make_qa_id(inst.kind, gt, question),
        question=question,
        answer=answer,
        kind=inst.kind,
        gt_chunk_ids=gt,
        domain=domain_of_chunk(gt[0]),
        meta=meta,
        pivot_entity=pivot or None,
        evidence=_evidence(inst),
        answer_in_context=contains(joined, answer),
    )


def _score(value) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean score")
    if isinstance(value, str):
        value = float(value.strip())
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"non-integer score {value}")
        value = int(value)
    if not isinstance(value, int) or not 1 <= value <= 5:
        raise ValueError(f"score out of range: {value!r}")
    return value


def parse_scores(raw: str, multi_hop: bool) -> QualityScores:
    obj = extract_json(raw)
    if not isinstance(obj, dict):
        raise ValueError("judge output is not an object")
    dims = obj.get("dimension_scores", obj)
    if not isinstance(dims, dict):
        raise ValueError("dimension_scores is not an object")
    scores = QualityScores(clarity=_score(dims["clarity"]), correctness=_score(dims["correctness"]))
    if multi_hop:
        scores.reasonableness = _score(dims["reasonableness"])
    return scores


def quality_gate(
    pair: QAPair,
    chunks: Mapping[str, Chunk],
    client: ProviderClient,
    model: str,
    threshold: int = DEFAULT_THRESHOLD,
) -> tuple[bool, Optional[QualityScores]]:
    """Accept iff every applicable dimension scores strictly above ``threshold``."""
    req = ChatRequest(
        model=model,
        system_prompt=prompts.quality_system(pair.multi_hop),
        user_prompt=prompts.quality_user(pair.question, pair.answer, [(c, chunks[c].text) for c in pair.gt_chunk_ids]),
    )
    raw = client.chat(req).text
    try:
        scores = parse_scores(raw, pair.multi_hop)
    except (NoJsonFound, KeyError, ValueError, TypeError) as exc:
        log.warning("malformed judge output for %s: %s", pair.qa_id, exc)
        return False, None
    return all(v > threshold for v in scores.values()), scores


def split_benchmark(
    accepted: Sequence[QAPair],
    quota: Union[int, Mapping[str, int]],
    seed: int,
) -> BenchmarkSplit:
    """Seeded sample of ``quota`` test items per (domain, kind) cell; the rest is train."""
    cells: dict[tuple[str, str], list[str]] = defaultdict(list)
    for qa in accepted:
        cells[(qa.domain, qa.kind)].append(qa.qa_id)
    test: set[str] = set()
    for (domain, kind) in sorted(cells):
        ids = sorted(cells[(domain, kind)])
        q = quota if isinstance(quota, int) else quota.get(kind, 0)
        rng = random.Random(f"{seed}|{domain}|{kind}")
        test.update(rng.sample(ids, min(max(q, 0), len(ids))))
    order = [qa.qa_id for qa in accepted]
    return BenchmarkSplit(train=[i for i in order if i not in test], test=[i for i in order if i in test])

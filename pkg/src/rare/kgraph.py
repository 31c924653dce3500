"""Knowledge-graph construction from chunk windows.

Triplets are extracted per window of consecutive chunks, checked against the
chunk they cite, relation-normalized corpus-wide by embedding similarity, and
merged into one directed multigraph keyed by surface-normalized entity names.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

from . import prompts
from .errors import NoJsonFound
from .ingest import Chunk
from .io import from_dict
from .providers import ChatRequest, EmbeddingVector, ProviderClient, cosine, extract_json
from .textnorm import collapse_ws, entity_key

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 3
DEFAULT_STRIDE = 2
DEFAULT_TAU_REL = 0.85


@dataclass(frozen=True)
class Triplet:
    entity_1: str
    relation: str
    entity_2: str
    answer_chunk_id: str
    source_sentence: str
    doc_id: str

    @classmethod
    def from_dict(cls, row: dict) -> "Triplet":
        return from_dict(cls, row)


@dataclass
class RelationCluster:
    canonical: str
    members: list[str]
    centroid: EmbeddingVector

    def to_dict(self) -> dict:
        return {
            "canonical": self.canonical,
            "members": sorted(self.members),
            "centroid": {"model": self.centroid.model, "values": list(self.centroid.values)},
        }


def windows(chunks: Sequence[Chunk], n: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE) -> list[list[Chunk]]:
    """Windows of ``n`` consecutive chunks every ``stride`` chunks; the tail is always covered."""
    if n < 1 or stride < 1:
        raise ValueError("window size and stride must be >= 1")
    if stride > n:
        raise ValueError("stride larger than the window would skip chunks")
    chunks = sorted(chunks, key=lambda c: c.ordinal)
    if len(chunks) <= n:
        return [list(chunks)] if chunks else []
    starts = list(range(0, len(chunks) - n + 1, stride))
    if starts[-1] + n < len(chunks):
        starts.append(len(chunks) - n)
    return [list(chunks[s : s + n]) for s in starts]


def parse_triplets(payload, window: Sequence[Chunk]) -> list[Triplet]:
    """Validate raw extractor output against the window; invalid items are dropped."""
    if isinstance(payload, dict):
        payload = next((v for v in payload.values() if isinstance(v, list)), [])
    if not isinstance(payload, list):
        log.warning("extractor returned %s, expected a list", type(payload).__name__)
        return []
    by_id = {c.chunk_id: c for c in window}
    out = []
    for item in payload:
        if not isinstance(item, dict):
            continue
        fields = {k: collapse_ws(str(item.get(k) or "")) for k in ("entity_1", "relation", "entity_2", "answer_chunk_id", "source_sentence")}
        if not all(fields.values()):
            log.warning("dropping triplet with empty field: %s", item)
            continue
        chunk = by_id.get(fields["answer_chunk_id"])
        if chunk is None:
            log.warning("dropping triplet citing chunk %r outside the window", fields["answer_chunk_id"])
            continue
        if fields["source_sentence"] not in collapse_ws(chunk.text):
            log.warning("dropping triplet: source sentence not found in %s: %r", chunk.chunk_id, fields["source_sentence"][:80])
            continue
        out.append(Triplet(doc_id=chunk.doc_id, **fields))
    return out


def extract_window(
    client: ProviderClient,
    model: str,
    window: Sequence[Chunk],
    domain: str,
    max_tokens: int = 4096,
) -> list[Triplet]:
    doc_ids = {c.doc_id for c in window}
    if len(doc_ids) != 1:
        raise ValueError("a window must come from a single document")
    req = ChatRequest(
        model=model,
        system_prompt=prompts.extraction_system(domain),
        user_prompt=prompts.extraction_user((c.chunk_id, c.text) for c in window),
        max_tokens=max_tokens,
    )
    raw = client.chat(req).text
    try:
        payload = extract_json(raw)
    except NoJsonFound:
        log.warning("no JSON in extractor output for window starting at %s", window[0].chunk_id)
        return []
    return parse_triplets(payload, window)


def extract_corpus(
    client: ProviderClient,
    model: str,
    chunks: Sequence[Chunk],
    domain_of_doc: dict[str, str],
    n: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
    workers: int = 8,
) -> list[Triplet]:
    by_doc: dict[str, list[Chunk]] = defaultdict(list)
    for c in chunks:
        by_doc[c.doc_id].append(c)
    jobs = [(w, domain_of_doc[doc]) for doc in by_doc for w in windows(by_doc[doc], n, stride)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda job: extract_window(client, model, job[0], job[1]), jobs))
    # overlapping windows may return the very same triplet twice
    return list(dict.fromkeys(t for batch in results for t in batch))


def normalize_relations(
    triplets: Sequence[Triplet],
    client: ProviderClient,
    model: str,
    tau: float = DEFAULT_TAU_REL,
) -> tuple[list[Triplet], list[RelationCluster]]:
    if not triplets:
        return [], []
    freq = Counter(t.relation for t in triplets)
    order = sorted(freq, key=lambda r: (-freq[r], r))
    vectors = dict(zip(order, client.embed(model, order)))

    clusters: list[RelationCluster] = []
    canonical: dict[str, str] = {}
    for rel in order:
        vec = vectors[rel]
        for cluster in clusters:
            if cosine(vec.values, cluster.centroid.values) >= tau:
                cluster.members.append(rel)
                canonical[rel] = cluster.canonical
                break
        else:
            # founders arrive in frequency order, so the founder is the canonical form
            clusters.append(RelationCluster(rel, [rel], vec))
            canonical[rel] = rel

    out = [
        t if canonical[t.relation] == t.relation else Triplet(t.entity_1, canonical[t.relation], t.entity_2, t.answer_chunk_id, t.source_sentence, t.doc_id)
        for t in triplets
    ]
    return out, clusters


@dataclass
class KnowledgeGraph:
    """Directed multigraph; treat as immutable once built."""

    names: dict[str, str] = field(default_factory=dict)
    edges: list[Triplet] = field(default_factory=list)
    out_degree: dict[str, int] = field(default_factory=dict)
    in_degree: dict[str, int] = field(default_factory=dict)

    @property
    def nodes(self) -> set[str]:
        return set(self.names)

    @staticmethod
    def key(name: str) -> str:
        return entity_key(name)

    @classmethod
    def from_triplets(cls, triplets: Iterable[Triplet], names: Optional[dict[str, str]] = None) -> "KnowledgeGraph":
        g = cls(names=dict(names or {}))
        seen: set[tuple[str, str, str, str]] = set()
        for t in triplets:
            k1, k2 = cls.key(t.entity_1), cls.key(t.entity_2)
            if k1 == k2:
                log.warning("skipping self-loop on %r", t.entity_1)
                continue
            dedup = (k1, t.relation, k2, t.answer_chunk_id)
            if dedup in seen:
                continue
            seen.add(dedup)
            g.names.setdefault(k1, t.entity_1)
            g.names.setdefault(k2, t.entity_2)
            g.edges.append(Triplet(g.names[k1], t.relation, g.names[k2], t.answer_chunk_id, t.source_sentence, t.doc_id))
        g._recount()
        return g

    def _recount(self) -> None:
        self.out_degree = {k: 0 for k in self.names}
        self.in_degree = {k: 0 for k in self.names}
        for e in self.edges:
            self.out_degree[self.key(e.entity_1)] += 1
            self.in_degree[self.key(e.entity_2)] += 1

    @cached_property
    def _adjacency(self) -> tuple[dict[str, list[int]], dict[str, list[int]]]:
        outs: dict[str, list[int]] = defaultdict(list)
        ins: dict[str, list[int]] = defaultdict(list)
        for i, e in enumerate(self.edges):
            outs[self.key(e.entity_1)].append(i)
            ins[self.key(e.entity_2)].append(i)
        return dict(outs), dict(ins)

    def out_edges(self, node_key: str) -> list[int]:
        return self._adjacency[0].get(node_key, [])

    def in_edges(self, node_key: str) -> list[int]:
        return self._adjacency[1].get(node_key, [])

    def to_dict(self, clusters: Sequence[RelationCluster] = ()) -> dict:
        return {
            "nodes": [
                {"key": k, "name": self.names[k], "in_degree": self.in_degree[k], "out_degree": self.out_degree[k]}
                for k in sorted(self.names)
            ],
            "edges": [e.__dict__ for e in self.edges],
            "clusters": [c.to_dict() for c in clusters],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KnowledgeGraph":
        names = {n["key"]: n["name"] for n in data.get("nodes", [])}
        return cls.from_triplets((Triplet.from_dict(e) for e in data["edges"]), names)


def build_graph(triplets: Iterable[Triplet]) -> KnowledgeGraph:
    return KnowledgeGraph.from_triplets(triplets)


def merge_graphs(graphs: Iterable[KnowledgeGraph]) -> KnowledgeGraph:
    """Union of the graphs; entities meet on case/whitespace-insensitive names."""
    return KnowledgeGraph.from_triplets(e for g in graphs for e in g.edges)


def build_corpus_graph(triplets: Sequence[Triplet]) -> KnowledgeGraph:
    by_doc: dict[str, list[Triplet]] = defaultdict(list)
    for t in triplets:
        by_doc[t.doc_id].append(t)
    return merge_graphs(build_graph(by_doc[d]) for d in by_doc)

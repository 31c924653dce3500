"""Pattern enumeration over the merged knowledge graph.

* single_hop: an isolated edge (head has out 1 / in 0, tail has in 1 / out 0)
* chained: simple directed path of 2..3 edges
* star: 2..3 out-edges of one head with distinct relations
* inverted_star: 2..3 in-edges of one tail with distinct relations

Multi-hop instances whose evidence sits in a single chunk are discarded.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .ingest import domain_of_chunk
from .kgraph import KnowledgeGraph, Triplet

KINDS = ("single_hop", "chained", "star", "inverted_star")
MULTI_HOP = frozenset(KINDS[1:])
DEFAULT_EDGE_CAP = 5


@dataclass
class PatternInstance:
    kind: str
    triplets: list[Triplet]
    pivot_entity: Optional[str]
    chunk_ids: list[str]
    edge_ids: list[int] = field(default_factory=list)

    @property
    def domain(self) -> str:
        return domain_of_chunk(self.chunk_ids[0])

    def to_dict(self, triplet_index: Optional[dict[Triplet, int]] = None) -> dict:
        row = {
            "kind": self.kind,
            "pivot_entity": self.pivot_entity,
            "chunk_ids": self.chunk_ids,
            "edge_ids": self.edge_ids,
        }
        if triplet_index is not None:
            row["triplet_indices"] = [triplet_index.get(t, -1) for t in self.triplets]
        row["triplets"] = [t.__dict__ for t in self.triplets]
        return row

    @classmethod
    def from_dict(cls, row: dict) -> "PatternInstance":
        return cls(
            kind=row["kind"],
            triplets=[Triplet.from_dict(t) for t in row["triplets"]],
            pivot_entity=row.get("pivot_entity"),
            chunk_ids=list(row["chunk_ids"]),
            edge_ids=list(row.get("edge_ids", [])),
        )


def _instance(kg: KnowledgeGraph, kind: str, edge_ids: Sequence[int], pivot: Optional[str]) -> PatternInstance:
    triplets = [kg.edges[i] for i in edge_ids]
    chunk_ids = list(dict.fromkeys(t.answer_chunk_id for t in triplets))
    return PatternInstance(kind, triplets, pivot, chunk_ids, list(edge_ids))


def find_single_hop(kg: KnowledgeGraph) -> list[PatternInstance]:
    out = []
    for i, e in enumerate(kg.edges):
        h, t = kg.key(e.entity_1), kg.key(e.entity_2)
        if kg.out_degree[h] == 1 and kg.in_degree[h] == 0 and kg.in_degree[t] == 1 and kg.out_degree[t] == 0:
            out.append(_instance(kg, "single_hop", [i], None))
    return out


def find_chained(kg: KnowledgeGraph, max_len: int = 3) -> list[PatternInstance]:
    out = []

    def extend(path: list[int], visited: list[str]) -> None:
        if len(path) >= 2:
            inst = _instance(kg, "chained", path, kg.edges[path[0]].entity_2)
            if len(inst.chunk_ids) >= 2:
                out.append(inst)
        if len(path) == max_len:
            return
        tail = kg.key(kg.edges[path[-1]].entity_2)
        for j in kg.out_edges(tail):
            nxt = kg.key(kg.edges[j].entity_2)
            if nxt not in visited:
                extend(path + [j], visited + [nxt])

    for i, e in enumerate(kg.edges):
        extend([i], [kg.key(e.entity_1), kg.key(e.entity_2)])
    return out


def _fans(kg: KnowledgeGraph, kind: str, groups: Iterable[tuple[str, list[int]]], branches: Sequence[int]) -> list[PatternInstance]:
    out = []
    for pivot_key, edge_ids in groups:
        for r in branches:
            for combo in combinations(edge_ids, r):
                rels = {kg.edges[i].relation for i in combo}
                if len(rels) < r:
                    continue
                inst = _instance(kg, kind, combo, kg.names[pivot_key])
                if len(inst.chunk_ids) >= 2:
                    out.append(inst)
    return out


def _node_order(kg: KnowledgeGraph, which: str) -> list[str]:
    attr = "entity_1" if which == "head" else "entity_2"
    return list(dict.fromkeys(kg.key(getattr(e, attr)) for e in kg.edges))


def find_star(kg: KnowledgeGraph, branches: Sequence[int] = (2, 3)) -> list[PatternInstance]:
    groups = ((k, kg.out_edges(k)) for k in _node_order(kg, "head"))
    return _fans(kg, "star", groups, branches)


def find_inverted_star(kg: KnowledgeGraph, branches: Sequence[int] = (2, 3)) -> list[PatternInstance]:
    groups = ((k, kg.in_edges(k)) for k in _node_order(kg, "tail"))
    return _fans(kg, "inverted_star", groups, branches)


def cap_edge_usage(instances: Iterable[PatternInstance], cap: Optional[int] = DEFAULT_EDGE_CAP) -> list[PatternInstance]:
    """Keep instances in order while no edge has been used ``cap`` times yet."""
    if cap is None:
        return list(instances)
    used: Counter[int] = Counter()
    kept = []
    for inst in instances:
        if all(used[i] < cap for i in inst.edge_ids):
            used.update(inst.edge_ids)
            kept.append(inst)
    return kept


def find_all(kg: KnowledgeGraph, max_len: int = 3, branches: Sequence[int] = (2, 3), edge_cap: Optional[int] = DEFAULT_EDGE_CAP) -> list[PatternInstance]:
    multi = find_chained(kg, max_len) + find_star(kg, branches) + find_inverted_star(kg, branches)
    # the cap applies per pattern kind so hubs cannot starve one shape
    capped = []
    for kind in ("chained", "star", "inverted_star"):
        capped += cap_edge_usage([m for m in multi if m.kind == kind], edge_cap)
    return find_single_hop(kg) + capped


def pattern_stats(instances: Iterable[PatternInstance]) -> dict[str, dict[str, int]]:
    """Counts per domain and kind, plus an ``all`` row."""
    table: dict[str, dict[str, int]] = defaultdict(lambda: {k: 0 for k in KINDS})
    table["all"] = {k: 0 for k in KINDS}
    for inst in instances:
        table[inst.domain][inst.kind] += 1
        table["all"][inst.kind] += 1
    return {d: dict(table[d]) for d in sorted(table)}

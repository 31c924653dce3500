import random

import pytest

from rare.kgraph import KnowledgeGraph, Triplet
from rare.patterns import (
    PatternInstance,
    cap_edge_usage,
    find_all,
    find_chained,
    find_inverted_star,
    find_single_hop,
    find_star,
    pattern_stats,
)

from graphs import oracle_chained, oracle_fan, oracle_single_hop, random_graph


def T(a, r, b, c, doc="d"):
    return Triplet(a, r, b, f"economics_{doc}_chunk_{c}", f"{a} {r} {b}.", doc)


def ids(instances):
    return {tuple(i.edge_ids) for i in instances}


@pytest.mark.parametrize("seed", range(30))
def test_finders_match_oracles(seed):
    kg = random_graph(random.Random(seed), max_edges=30)
    assert ids(find_single_hop(kg)) == oracle_single_hop(kg)
    assert ids(find_chained(kg)) == oracle_chained(kg)
    assert ids(find_star(kg)) == oracle_fan(kg, "entity_1")
    assert ids(find_inverted_star(kg)) == oracle_fan(kg, "entity_2")


def test_chain_pivot_and_single_hop_shape():
    kg = KnowledgeGraph.from_triplets([T("Luxembourg", "implemented", "free transport", 0), T("free transport", "reduces", "emissions", 1), T("HOME", "built", "45 units", 2)])
    chains = find_chained(kg)
    assert [c.pivot_entity for c in chains] == ["free transport"]
    assert chains[0].chunk_ids == ["economics_d_chunk_0", "economics_d_chunk_1"]
    assert [i.triplets[0].entity_1 for i in find_single_hop(kg)] == ["HOME"]


def test_same_chunk_patterns_are_dropped():
    kg = KnowledgeGraph.from_triplets([T("A", "r1", "B", 0), T("B", "r2", "C", 0), T("A", "r3", "D", 0)])
    assert find_chained(kg) == [] and find_star(kg) == []


def test_star_requires_distinct_relations():
    kg = KnowledgeGraph.from_triplets([T("A", "r", "B", 0), T("A", "r", "C", 1), T("A", "s", "D", 2)])
    assert ids(find_star(kg)) == {(0, 2), (1, 2)}


def test_edge_cap():
    insts = [PatternInstance("star", [], "x", ["a", "b"], [0, i]) for i in range(1, 8)]
    kept = cap_edge_usage(insts, 5)
    assert len(kept) == 5
    assert cap_edge_usage(insts, None) == insts


def test_find_all_and_stats():
    kg = KnowledgeGraph.from_triplets(
        [T("A", "r1", "B", 0), T("B", "r2", "C", 1), T("A", "r3", "D", 2), T("X", "r4", "Y", 3), T("Z", "r5", "C", 4)]
    )
    insts = find_all(kg)
    stats = pattern_stats(insts)
    assert stats["all"] == {"single_hop": 1, "chained": 1, "star": 1, "inverted_star": 1}
    assert stats["economics"] == stats["all"]
    round_trip = [PatternInstance.from_dict(i.to_dict()) for i in insts]
    assert [r.edge_ids for r in round_trip] == [i.edge_ids for i in insts]

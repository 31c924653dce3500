"""Random knowledge graphs and brute-force pattern oracles shared by tests."""

import random
from itertools import chain, combinations

from rare.kgraph import KnowledgeGraph, Triplet


def random_graph(rng: random.Random, max_edges: int = 50) -> KnowledgeGraph:
    n_nodes = rng.randint(2, 12)
    names = [f"Entity {i}" for i in range(n_nodes)]
    triplets = []
    for _ in range(rng.randint(0, max_edges)):
        a, b = rng.choice(names), rng.choice(names)
        # case variants must merge onto one node
        if rng.random() < 0.2:
            a = a.upper()
        chunk = f"economics_d_chunk_{rng.randint(0, 4)}"
        rel = f"rel{rng.randint(0, 3)}"
        triplets.append(Triplet(a, rel, b, chunk, f"{a} {rel} {b}.", "d"))
    return KnowledgeGraph.from_triplets(triplets)


def degrees(kg):
    outd, ind = {}, {}
    for e in kg.edges:
        h, t = e.entity_1.casefold(), e.entity_2.casefold()
        outd[h] = outd.get(h, 0) + 1
        ind[t] = ind.get(t, 0) + 1
    return outd, ind


def oracle_single_hop(kg):
    outd, ind = degrees(kg)
    got = set()
    for i, e in enumerate(kg.edges):
        h, t = e.entity_1.casefold(), e.entity_2.casefold()
        if outd.get(h, 0) == 1 and ind.get(h, 0) == 0 and ind.get(t, 0) == 1 and outd.get(t, 0) == 0:
            got.add((i,))
    return got


def oracle_chained(kg, max_len=3):
    """Every edge sequence of length 2..max_len, linked head-to-tail, visiting no node twice."""
    edges = [(e.entity_1.casefold(), e.entity_2.casefold(), e.answer_chunk_id) for e in kg.edges]
    got = set()

    def ok(path):
        nodes = [edges[path[0]][0]] + [edges[i][1] for i in path]
        return len(set(nodes)) == len(nodes) and len({edges[i][2] for i in path}) >= 2

    E = range(len(edges))
    for a in E:
        for b in E:
            if edges[a][1] != edges[b][0]:
                continue
            if ok((a, b)):
                got.add((a, b))
            if max_len < 3:
                continue
            for c in E:
                if edges[b][1] == edges[c][0] and ok((a, b, c)):
                    got.add((a, b, c))
    return got


def oracle_fan(kg, shared: str):
    """All 2- and 3-subsets of edges sharing one endpoint, with distinct relations and >= 2 chunks."""
    key = [getattr(e, shared).casefold() for e in kg.edges]
    rel = [e.relation for e in kg.edges]
    chunk = [e.answer_chunk_id for e in kg.edges]
    got = set()
    for combo in chain(combinations(range(len(key)), 2), combinations(range(len(key)), 3)):
        if len({key[i] for i in combo}) == 1 and len({rel[i] for i in combo}) == len(combo) and len({chunk[i] for i in combo}) >= 2:
            got.add(combo)
    return got

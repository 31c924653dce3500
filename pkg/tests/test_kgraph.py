import json

import pytest

from rare.kgraph import (
    KnowledgeGraph,
    Triplet,
    build_corpus_graph,
    extract_corpus,
    normalize_relations,
    parse_triplets,
    windows,
)
from rare.providers import MockBackend, ProviderClient

from conftest import make_chunk


def chunks(n, doc="d"):
    return [make_chunk(f"economics_{doc}_chunk_{i}", f"Sentence number {i} of {doc}.", doc, i) for i in range(n)]


@pytest.mark.parametrize("n_chunks", range(0, 12))
@pytest.mark.parametrize("n, stride", [(3, 2), (1, 1), (4, 3), (2, 2)])
def test_windows_cover_everything(n_chunks, n, stride):
    cs = chunks(n_chunks)
    ws = windows(cs, n, stride)
    covered = {c.chunk_id for w in ws for c in w}
    assert covered == {c.chunk_id for c in cs}
    assert all(len(w) == min(n, n_chunks) for w in ws)
    for w in ws:
        assert [c.ordinal for c in w] == list(range(w[0].ordinal, w[0].ordinal + len(w)))


def test_windows_reject_gaps():
    with pytest.raises(ValueError):
        windows(chunks(4), 2, 3)


def test_parse_triplets_filters_bad_items():
    window = chunks(2)
    good = {"entity_1": "A", "relation": "r", "entity_2": "B", "answer_chunk_id": "economics_d_chunk_1", "source_sentence": "Sentence  number 1 of d."}
    items = [
        good,
        {**good, "answer_chunk_id": "economics_d_chunk_9"},
        {**good, "source_sentence": "Invented sentence."},
        {**good, "entity_2": ""},
        "junk",
    ]
    out = parse_triplets(items, window)
    assert out == [Triplet("A", "r", "B", "economics_d_chunk_1", "Sentence number 1 of d.", "d")]
    assert parse_triplets({"triplets": [good]}, window) == out


def test_extract_corpus_dedups_overlap():
    cs = chunks(5)

    def handler(req):
        ids = [line[len("Chunk ID: "):] for line in req.user_prompt.splitlines() if line.startswith("Chunk ID: ")]
        # every window reports the triplet of chunk 2 if it can see it
        if "economics_d_chunk_2" in ids:
            return json.dumps([{"entity_1": "A", "relation": "r", "entity_2": "B", "answer_chunk_id": "economics_d_chunk_2", "source_sentence": "Sentence number 2 of d."}])
        return "nothing to report"

    client = ProviderClient(MockBackend(handler=handler))
    got = extract_corpus(client, "x", cs, {"d": "economics"})
    assert len(got) == 1


def test_normalize_relations_merges_close_relations():
    t = [
        Triplet("A", "invests in", "B", "c0", "s", "d"),
        Triplet("C", "invests in", "D", "c1", "s", "d"),
        Triplet("E", "invested in", "F", "c2", "s", "d"),
        Triplet("G", "grows", "H", "c3", "s", "d"),
    ]
    vecs = {"invests in": [1.0, 0.0], "invested in": [0.9, 0.1], "grows": [0.0, 1.0]}
    client = ProviderClient(MockBackend(vectors=vecs))
    out, clusters = normalize_relations(t, client, "e", tau=0.85)
    assert [x.relation for x in out] == ["invests in", "invests in", "invests in", "grows"]
    assert [(c.canonical, c.members) for c in clusters] == [("invests in", ["invests in", "invested in"]), ("grows", ["grows"])]


def test_graph_merges_entities_and_counts_degrees():
    t = [
        Triplet("Luxembourg", "implements", "Free Transport", "c0", "s", "d1"),
        Triplet("luxembourg ", "invests in", "energy", "c1", "s", "d2"),
        Triplet("Luxembourg", "implements", "free transport", "c0", "s", "d1"),  # duplicate after folding
        Triplet("x", "loops", "X", "c2", "s", "d1"),  # self-loop
    ]
    kg = build_corpus_graph(t)
    assert len(kg.edges) == 2
    assert kg.out_degree["luxembourg"] == 2
    assert kg.names["luxembourg"] == "Luxembourg"
    again = KnowledgeGraph.from_dict(json.loads(json.dumps(kg.to_dict())))
    assert again.edges == kg.edges and again.in_degree == kg.in_degree

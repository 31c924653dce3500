import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rare.errors import EmptyDocument, RareError
from rare.ingest import (
    SourceDocument,
    chunk_corpus,
    chunk_document,
    count_tokens,
    domain_of_chunk,
    load_corpus,
    load_document,
    segment_units,
)

MIXED = """Intro paragraph about the survey with a handful of words in it.

Second paragraph that talks about housing prices and permits at some length.

Table 3. Housing indicators
| Year | Price index |
|---|---|
| 2022 | 101.2 |
| 2023 | 104.9 |

The price index rose to 104.9 in 2023.

Final paragraph."""


def doc(body, doc_id="d1", domain="economics"):
    return SourceDocument(doc_id, domain, body)


def greedy_oracle(sizes, budget):
    """Reference packing on unit sizes alone (the default counter is additive)."""
    groups, cur, used = [], [], 0
    for i, s in enumerate(sizes):
        if cur and used + s > budget:
            groups.append(cur)
            cur, used = [], 0
        cur.append(i)
        used += s
    if cur:
        groups.append(cur)
    return groups


def test_table_keeps_caption_and_explanation():
    units = segment_units(doc(MIXED))
    tables = [u for u in units if u.is_table]
    assert len(tables) == 1
    assert tables[0].text.startswith("Table 3. Housing indicators\n| Year")
    assert tables[0].text.endswith("The price index rose to 104.9 in 2023.")


def test_round_trip_and_ids():
    chunks = chunk_document(doc(MIXED), budget=20)
    units = segment_units(doc(MIXED))
    assert "\n\n".join(c.text for c in chunks) == "\n\n".join(u.text for u in units)
    assert [c.ordinal for c in chunks] == list(range(len(chunks)))
    assert chunks[0].chunk_id == "economics_d1_chunk_0"
    assert domain_of_chunk(chunks[0].chunk_id) == "economics"


def test_oversized_unit_is_a_singleton():
    body = "short one\n\n" + " ".join(["word"] * 50) + "\n\nshort two"
    chunks = chunk_document(doc(body), budget=10)
    assert [c.token_count for c in chunks] == [2, 50, 2]


def test_empty_document_raises():
    with pytest.raises(EmptyDocument):
        chunk_document(doc("  \n\n "))


def test_duplicate_doc_ids_rejected():
    with pytest.raises(RareError):
        chunk_corpus([doc("a"), doc("b")])


def test_load_document_with_sidecar(tmp_path):
    (tmp_path / "rep.md").write_text("Body text.", encoding="utf-8")
    (tmp_path / "rep.meta.json").write_text(
        json.dumps({"domain": "finance", "title": "T", "year": 2024, "company": "C", "auditor": "X"}), encoding="utf-8"
    )
    (tmp_path / "notes.txt").write_text("Other.", encoding="utf-8")
    d = load_document(tmp_path / "rep.md")
    assert (d.doc_id, d.domain, d.meta.year, d.meta.company, d.meta.extra) == ("rep", "finance", 2024, "C", {"auditor": "X"})
    assert [x.doc_id for x in load_corpus(tmp_path)] == ["notes", "rep"]
    assert load_corpus(tmp_path)[0].domain == "other"


paragraph = st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta", "7.5%", "2023"]), min_size=1, max_size=40).map(" ".join)
table = st.lists(st.tuples(st.sampled_from(["Rate", "Debt"]), st.integers(0, 999)), min_size=1, max_size=4).map(
    lambda rows: "| k | v |\n|---|---|\n" + "\n".join(f"| {k} | {v} |" for k, v in rows)
)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.one_of(paragraph, table), min_size=1, max_size=12), st.integers(5, 60))
def test_packing_matches_greedy_oracle(blocks, budget):
    d = doc("\n\n".join(blocks))
    units = segment_units(d)
    chunks = chunk_document(d, budget)
    # round trip
    assert "\n\n".join(c.text for c in chunks) == "\n\n".join(u.text for u in units)
    # grouping equals the reference greedy packing
    groups = greedy_oracle([u.token_count for u in units], budget)
    assert [c.text for c in chunks] == ["\n\n".join(units[i].text for i in g) for g in groups]
    for c, g in zip(chunks, groups):
        assert c.token_count == count_tokens(c.text)
        assert c.token_count <= budget or len(g) == 1
        assert c.contains_table == any(units[i].is_table for i in g)


def test_caption_in_own_block_joins_table():
    body = "Long paragraph with enough words to be a paragraph and not a caption at all, really long indeed here.\n\nTable 9. Rates\n\n| a | b |\n|---|---|\n| 1 | 2 |"
    units = segment_units(doc(body))
    assert [u.is_table for u in units] == [False, True]
    assert units[1].text.startswith("Table 9. Rates\n\n| a | b |")

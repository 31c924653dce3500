from hypothesis import given
from hypothesis import strategies as st

from rare.textnorm import collapse_ws, contains, flexible_pattern, fold, normalize_answer, split_sentences


def test_normalize_keeps_number_separators():
    assert normalize_answer("$94.8 billion") == "94.8 billion"
    assert normalize_answer("1,250 youth!") == "1,250 youth"
    assert normalize_answer("Free public transport, for all.") == "free public transport for all"


def test_normalize_folds_width_and_case():
    assert normalize_answer("ＡＢＣ  Straße") == "abc strasse"


def test_contains_is_case_and_space_insensitive():
    assert contains("The  Unemployment\nrate", "unemployment rate")
    assert not contains("anything", "")


def test_flexible_pattern_spans_line_breaks():
    assert flexible_pattern("new housing units").search("45 new\nhousing   units")


def test_split_sentences():
    assert split_sentences("One thing. Two things! 3 more.") == ["One thing.", "Two things!", "3 more."]


@given(st.text())
def test_fold_idempotent(s):
    assert fold(fold(s)) == fold(s)
    assert collapse_ws(collapse_ws(s)) == collapse_ws(s)


@given(st.text())
def test_normalize_idempotent(s):
    assert normalize_answer(normalize_answer(s)) == normalize_answer(s)

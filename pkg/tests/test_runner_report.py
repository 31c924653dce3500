import json

import pytest

from rare.evalcore import (
    AnswerMatcher,
    EvalSettings,
    JudgeVerdict,
    MetricOptions,
    RAGGenerator,
    aggregate_report,
    evaluate,
    parse_generation,
)
from rare.perturb import DocVariant, QueryVariant
from rare.providers import MockBackend, ProviderClient
from rare.qagen import QAPair
from rare.retrieval import RetrievalSet

from conftest import make_chunk

GT = make_chunk("policy_p_chunk_0", "HOME built 45 new housing units.")
OTHER = make_chunk("policy_p_chunk_1", "Unrelated text.")
CHUNKS = {c.chunk_id: c for c in (GT, OTHER)}
QA = QAPair("q1", "How many units did HOME build?", "45 new housing units", "single_hop", [GT.chunk_id], "policy")


def variants():
    qv = {k: QueryVariant("q1", k, f"{QA.question} [{k}]") for k in ("original", "char_level", "word_level", "grammar", "irrelevant_info")}
    qv["original"] = QueryVariant("q1", "original", QA.question)
    dv = {
        "ground_truth": DocVariant("q1", "ground_truth", [[GT.chunk_id, GT.text]], True),
        "answer_removed": DocVariant("q1", "answer_removed", [[GT.chunk_id, "HOME built [...]."]], False),
        "back_translated": DocVariant("q1", "back_translated", [[GT.chunk_id, "HOME constructed 45 new housing units."]], True),
    }
    rs = [RetrievalSet("q1", "emb", [OTHER.chunk_id], [0.3], False), RetrievalSet("q1", "emb2", [GT.chunk_id], [0.9], True)]
    return {"q1": qv}, {"q1": dv}, {"q1": rs}


@pytest.mark.parametrize(
    "raw, expected",
    [
        ('{"cot_answer": "c", "answer": " 45 "}', ("c", "45", False)),
        ("Reasoning...\nAnswer: 45 units", ("", "45 units", False)),
        ("just text", ("", "just text", True)),
    ],
)
def test_parse_generation(raw, expected):
    assert parse_generation(raw) == expected


def run(handler, mode="strict"):
    client = ProviderClient(MockBackend(handler=handler))
    gen = RAGGenerator(client, "g")
    qv, dv, rs = variants()
    return evaluate(gen, AnswerMatcher(), [QA], qv, dv, rs, CHUNKS, EvalSettings(mode=mode, workers=2))


def literal(req):
    ctx = req.user_prompt.partition("\nContext: ")[2]
    ans = "45 new housing units" if "45 new housing units" in ctx else "about 12"
    return json.dumps({"answer": ans})


def test_grid_and_closed_book_pass():
    records, verdicts = run(literal)
    assert records[0].doc_kind == "closed_book" and records[0].answer == "about 12"
    assert len(records) == 1 + 15 + 2 and len(verdicts) == 17
    cells = {(v.query_kind, v.doc_kind): v.f for v in verdicts}
    assert cells[("original", "ground_truth")] == 1
    assert cells[("original", "answer_removed")] == 0  # hallucinated instead of refusing
    assert cells[("original", "retrieval:emb")] == 0 and cells[("original", "retrieval:emb2")] == 1
    assert all(not v.closed_book_correct for v in verdicts)


def test_generation_errors_are_not_judged():
    def flaky(req):
        if "[grammar]" in req.user_prompt:
            return None  # mock backend raises ProviderUnavailable
        return literal(req)

    records, verdicts = run(flaky)
    assert sum(r.error is not None for r in records) == 3
    assert len(verdicts) == 14


def test_report_aggregates_per_cell():
    _, verdicts = run(literal)
    _, refusals = run(lambda r: '{"answer": "no such info"}')
    for v in refusals:
        v.generator = "refuser"
    report = aggregate_report(verdicts + refusals, {"q1": QA})
    by_gen = {t.generator: t for t in report.totals}
    assert by_gen["g"].query == 1 and by_gen["g"].document == 0.5 and by_gen["g"].retrieval == 0.5
    assert by_gen["refuser"].document == 0.5 and by_gen["refuser"].overall == pytest.approx(5 / 15)
    assert report.cells[0].domain == "policy" and report.cells[0].hops == "single"
    csv_lines = report.to_csv().splitlines()
    assert csv_lines[0].startswith("generator,domain,hops,overall")
    assert "| g |" in report.to_markdown()
    assert json.loads(json.dumps(report.to_dict()))["mode"] == "strict"


def test_report_lenient_field():
    def context_only(req):
        return '{"answer": "45 new housing units"}' if "Context:" in req.user_prompt else '{"answer": "about 12"}'

    _, verdicts = run(context_only)
    strict = aggregate_report(verdicts, {"q1": QA})
    lenient = aggregate_report(verdicts, {"q1": QA}, MetricOptions(field="f_lenient"), "lenient")
    assert strict.totals[0].document == 0.5 and lenient.totals[0].document == 1.0


def test_report_skips_incomplete_metrics():
    v = JudgeVerdict("q1", "original", "ground_truth", True, False, True, False, 1, generator="g")
    report = aggregate_report([v], {"q1": QA})
    assert report.totals[0].overall is None and report.totals[0].counts["overall"] == 0

import json

import pytest

from rare.config import load_config
from rare.errors import ConfigInvalid, MissingArtifact
from rare.io import read_jsonl
from rare.pipeline import STAGES, Pipeline


def test_stage_before_its_inputs_raises(toy_cfg):
    pipe = Pipeline(toy_cfg, mock=True)
    with pytest.raises(MissingArtifact) as err:
        pipe.run_stage("evaluate")
    assert err.value.stage in STAGES


def test_full_run_then_skip_then_force(toy_cfg):
    pipe = Pipeline(toy_cfg, mock=True)
    first = pipe.run_all()
    assert [r.skipped for r in first] == [False] * len(STAGES)
    calls = pipe._backend.chat_calls
    assert calls > 0

    again = Pipeline(toy_cfg, mock=True)
    assert all(r.skipped for r in again.run_all())

    # a forced replay is served entirely from the response cache
    replay = Pipeline(toy_cfg, mock=True)
    outputs = {r.name: r.outputs for r in first}
    forced = replay.run_all(force=True)
    assert replay.network_calls == 0 and replay._backend.chat_calls == 0
    assert {r.name: r.outputs for r in forced} == outputs


def test_config_change_reruns_downstream_only(toy_config):
    cfg = load_config(toy_config)
    Pipeline(cfg, mock=True).run_all()
    text = toy_config.read_text(encoding="utf-8").replace('judge_mode = "strict"', 'judge_mode = "lenient"')
    toy_config.write_text(text, encoding="utf-8")
    results = {r.name: r.skipped for r in Pipeline(load_config(toy_config), mock=True).run_all()}
    assert results["genqa"] and results["perturb"]
    assert not results["evaluate"] and not results["report"]


def test_tampered_output_triggers_rerun(toy_cfg):
    pipe = Pipeline(toy_cfg, mock=True)
    pipe.run_all(until="patterns")
    path = pipe.path("patterns.jsonl")
    path.write_text("", encoding="utf-8")
    res = Pipeline(toy_cfg, mock=True).run_stage("patterns")
    assert not res.skipped and path.read_text(encoding="utf-8")


def test_manifest_records_digests(toy_cfg):
    pipe = Pipeline(toy_cfg, mock=True)
    pipe.run_all(until="ingest")
    manifest = json.loads(pipe.path("manifest.json").read_text(encoding="utf-8"))
    entry = manifest["stages"]["ingest"]
    assert set(entry["outputs"]) == {"documents.jsonl", "chunks.jsonl"} and len(entry["fingerprint"]) == 64


def test_real_provider_needs_base_url(toy_cfg):
    with pytest.raises(ConfigInvalid):
        Pipeline(toy_cfg).run_all()


def test_self_graded_warning(toy_config, caplog):
    text = toy_config.read_text(encoding="utf-8").replace('qa_judge = "mock-judge"', 'qa_judge = "mock-extractor"')
    toy_config.write_text(text, encoding="utf-8")
    Pipeline(load_config(toy_config), mock=True).run_all(until="genqa")
    assert any("self-graded" in r.message for r in caplog.records)


def test_generations_carry_generator_names(toy_cfg):
    pipe = Pipeline(toy_cfg, mock=True)
    pipe.run_all()
    gens = {r["generator_model"] for r in read_jsonl(pipe.path("generations.jsonl"))}
    assert gens == {"mock-echo", "mock-refuse", "mock-literal"}

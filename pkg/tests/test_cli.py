from rare.cli import EXIT_CONFIG, EXIT_MISSING, EXIT_OK, main


def test_run_prints_report(toy_config, capsys):
    assert main(["run", "--config", str(toy_config), "--mock"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "report: done" in out and "| mock-echo | 1.000 | 1.000 | 1.000 | 1.000 |" in out


def test_single_stage_and_up_to_date(toy_config, capsys):
    assert main(["ingest", "-c", str(toy_config), "--mock"]) == EXIT_OK
    assert main(["ingest", "-c", str(toy_config), "--mock"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1] == "ingest: up to date"
    assert main(["ingest", "-c", str(toy_config), "--mock", "--force"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1] == "ingest: done"


def test_missing_artifact_exit_code(toy_config, capsys):
    assert main(["evaluate", "-c", str(toy_config), "--mock"]) == EXIT_MISSING
    assert "run stage" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["run", "-c", str(tmp_path / "nope.toml")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_seed_override_changes_variants(toy_config):
    assert main(["run", "-c", str(toy_config), "--mock", "--until", "perturb"]) == EXIT_OK
    out = toy_config.parent / "runs" / "toy" / "query_variants.jsonl"
    before = out.read_text(encoding="utf-8")
    assert main(["perturb", "-c", str(toy_config), "--mock", "--seed", "99"]) == EXIT_OK
    assert out.read_text(encoding="utf-8") != before


def test_init_toy(tmp_path, capsys):
    assert main(["init-toy", str(tmp_path / "t")]) == EXIT_OK
    assert (tmp_path / "t" / "corpus" / "mock" / "extraction.json").exists()

from pathlib import Path

import pytest

from rare.cli import init_toy
from rare.config import load_config
from rare.ingest import Chunk
from rare.providers import MockBackend, ProviderClient


@pytest.fixture
def mock_backend() -> MockBackend:
    return MockBackend()


@pytest.fixture
def client(mock_backend) -> ProviderClient:
    return ProviderClient(mock_backend, sleep=lambda s: None)


@pytest.fixture
def toy_config(tmp_path) -> Path:
    return init_toy(tmp_path / "toy")


@pytest.fixture
def toy_cfg(toy_config):
    return load_config(toy_config)


def make_chunk(cid: str, text: str, doc_id: str = "doc", ordinal: int = 0) -> Chunk:
    return Chunk(cid, doc_id, ordinal, text, len(text.split()), False)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

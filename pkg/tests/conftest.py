from __future__ import annotations

from pathlib import Path

import pytest

from affilmagnet.matcher import build_index
from affilmagnet.registry import load_ror_dump
from affilmagnet.store import CurationStore

from .doubles import MockTrackerServer, MockWorksServer

FIXTURE_DIR = Path(__file__).parent / "fixtures"
REGISTRY_FIXTURE = FIXTURE_DIR / "ror_dump_200.jsonl"


@pytest.fixture(scope="session")
def registry():
    return load_ror_dump(REGISTRY_FIXTURE)


@pytest.fixture(scope="session")
def index(registry):
    return build_index(registry)


@pytest.fixture
def works_server():
    server = MockWorksServer().start()
    yield server
    server.stop()


@pytest.fixture
def tracker_server():
    server = MockTrackerServer().start()
    yield server
    server.stop()


@pytest.fixture
def store(tmp_path):
    with CurationStore(tmp_path / "requests") as s:
        yield s


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # surface the acceptance verdict lines after capture is torn down,
    # so they show up even on fully green runs
    try:
        from . import test_acceptance
    except ImportError:
        return
    if test_acceptance.VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in test_acceptance.VERDICTS:
            terminalreporter.write_line(line)

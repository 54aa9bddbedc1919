from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from modality_advisor.decomposer import load_lexicon
from modality_advisor.knowledge_base import load_kb
from modality_advisor.scoring import ScoringConfig
from modality_advisor.task_model import load_corpus

DATA = Path(str(resources.files("modality_advisor") / "data"))
DESK_CORPUS = DATA / "desk_corpus.jsonl"
REFERENCE_FIXTURES = DATA / "reference_fixtures.jsonl"
DEFAULT_GRID = DATA / "default_grid.json"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture(scope="session")
def seed_kb():
    return load_kb()


@pytest.fixture(scope="session")
def config():
    return ScoringConfig()


@pytest.fixture(scope="session")
def desk_corpus():
    return load_corpus(DESK_CORPUS)


@pytest.fixture(scope="session")
def fixtures():
    return {t.id: t for t in load_corpus(REFERENCE_FIXTURES)}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])

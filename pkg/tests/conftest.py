import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

DATA_DIR = TESTS_DIR / "data"


@pytest.fixture(scope="session")
def skills_path() -> Path:
    return DATA_DIR / "skills_299.json"


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return DATA_DIR / "corpus_50.jsonl"


@pytest.fixture(scope="session")
def guard_corpus_path() -> Path:
    return DATA_DIR / "sql_guard_corpus.json"

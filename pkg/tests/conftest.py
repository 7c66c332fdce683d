from importlib import resources

import pytest

from ldner.corpus import read_conll
from ldner.embeddings import load_embeddings

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def synthetic_dir():
    return resources.files("ldner.data.synthetic")


@pytest.fixture(scope="session")
def synthetic_corpus(synthetic_dir):
    return read_conll(synthetic_dir / "corpus.conll")


@pytest.fixture(scope="session")
def synthetic_store(synthetic_dir):
    return load_embeddings(synthetic_dir / "embeddings.txt")


@pytest.fixture
def record_criterion():
    """Record one acceptance-criterion verdict for the terminal summary."""
    def record(name, passed, detail=""):
        ACCEPTANCE_RESULTS.append((name, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")

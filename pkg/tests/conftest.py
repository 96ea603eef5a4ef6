from pathlib import Path

import pytest

from skilltrace.classifier import train_ensemble
from skilltrace.corpus import PermissionClass
from skilltrace.synthetic import synthetic_corpus

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def synthetic():
    return synthetic_corpus(per_class=2000)


@pytest.fixture(scope="session")
def ensemble(synthetic):
    return train_ensemble(synthetic, workers=4)


class LabelClassifier:
    """Stand-in classifier that looks sentences up in a fixed table."""

    def __init__(self, table=None, default=frozenset({PermissionClass.NONE})):
        self.table = table or {}
        self.default = frozenset(default)

    def predict(self, sentence):
        return frozenset(self.table.get(sentence, self.default))


@pytest.fixture
def label_classifier():
    return LabelClassifier


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])

import numpy as np
import pytest

from lastround.game import PayoffMatrix

IDENTITY = PayoffMatrix(np.eye(2))
DERIVED = PayoffMatrix(np.array([[0.8, 0.2], [0.3, 0.6]]))


@pytest.fixture
def identity_game():
    return IDENTITY


@pytest.fixture
def derived_game():
    return DERIVED


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance report, then assert."""

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from pathlib import Path

import pytest

from twinbeam.config import load_config

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def device_config():
    """Operating point of the highest pump power (detected signal mean 0.0137)."""
    return load_config(FIXTURES / "fig3.cfg")


ACCEPTANCE = {}


class Criterion:
    """Collects named checks for one acceptance criterion; fails the test if any check fails."""

    def __init__(self, number, title):
        self.number, self.title = number, title
        self.failed, self.notes = [], []

    def check(self, ok, message):
        self.notes.append(message)
        if not ok:
            self.failed.append(message)

    def note(self, message):
        self.notes.append(message)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.failed.append(f"{exc_type.__name__}: {exc}")
        status = "FAIL" if self.failed else "PASS"
        ACCEPTANCE[self.number] = f"criterion {self.number:>2} {status}  {self.title}: " + "; ".join(
            self.failed if self.failed else self.notes)
        if exc_type is None and self.failed:
            pytest.fail("; ".join(self.failed))
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from govkernel.scenario import load_fixture  # noqa: E402


@pytest.fixture
def connector():
    return load_fixture("connector_install.yaml")


@pytest.fixture
def cross_version():
    return load_fixture("cross_version.yaml")


@pytest.fixture
def office():
    return load_fixture("office_assistant.yaml")


# acceptance outcomes, printed as one line each at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, text in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {text}")


@pytest.fixture
def accept():
    """Record one criterion outcome for the summary, then assert it."""
    def check(num, ok, text):
        ACCEPTANCE.append((num, bool(ok), text))
        assert ok, f"criterion {num}: {text}"
    return check

from __future__ import annotations

import numpy as np
import pytest

from pheat.fixtures import get_fixture

# (label, passed, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{label} {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture
def p4():
    return get_fixture("p4").graph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

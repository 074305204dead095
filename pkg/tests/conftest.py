from __future__ import annotations

import pytest

from element_analysis.noise import RateTableCache

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Collect one acceptance line for the end-of-run summary."""
    _ACCEPTANCE_LINES.append(line)


@pytest.fixture(scope="session")
def table_cache(tmp_path_factory):
    """Rate-table cache shared by every test in the session."""
    return RateTableCache(tmp_path_factory.mktemp("ratetables"))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

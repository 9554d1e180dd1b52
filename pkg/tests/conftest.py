"""Shared fixtures; collects one summary line per acceptance criterion."""

from __future__ import annotations

import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def report_criterion():
    """``report_criterion(number, title, passed, detail)`` records a summary line."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        _CRITERIA[number] = f"criterion {number:02d} [{status}] {title}: {detail}"
        print(_CRITERIA[number])

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])

"""Collects the one-line criterion reports from the acceptance suite."""

import pytest

REPORT: list[str] = []


@pytest.fixture
def report():
    def emit(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        REPORT.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

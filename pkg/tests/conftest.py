from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(n, ok, text)``."""

    def _report(number: int, ok: bool, text: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}"
        print(line)
        _LINES.append(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

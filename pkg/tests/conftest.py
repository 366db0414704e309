"""Collects acceptance verdicts and prints them at the end of the session."""

import pytest

VERDICTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    def record(number: int, ok: bool, detail: str) -> None:
        VERDICTS[number] = (bool(ok), detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        ok, detail = VERDICTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

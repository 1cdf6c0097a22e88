from __future__ import annotations

import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


class AcceptanceLog:
    """Collects one verdict per acceptance criterion for the end-of-run summary."""

    def record(self, criterion: str, passed: bool, detail: str) -> None:
        ok, prev = _ACCEPTANCE.get(criterion, (True, ""))
        joined = f"{prev}; {detail}" if prev else detail
        _ACCEPTANCE[criterion] = (ok and bool(passed), joined)


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceLog:
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in _ACCEPTANCE:
        ok, detail = _ACCEPTANCE[criterion]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  [{detail}]")

"""Shared test plumbing: the acceptance-criteria scoreboard.

Acceptance tests record one verdict each; the scoreboard is printed as a
terminal-summary block so a plain ``pytest -v`` run ends with one
PASS/FAIL line per criterion, with the measured numbers inline.
"""

import pytest

_SCOREBOARD = []


@pytest.fixture
def acceptance():
    """Recorder for one acceptance criterion: asserts and logs the verdict."""

    def record(num: int, name: str, ok: bool, detail: str = "") -> None:
        _SCOREBOARD.append((int(num), str(name), bool(ok), str(detail)))
        assert ok, f"acceptance {num} ({name}): {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _SCOREBOARD:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num, name, ok, detail in sorted(_SCOREBOARD):
        verdict = "PASS" if ok else "FAIL"
        line = f"[{num:2d}] {name}: {verdict}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)

"""Shared test plumbing.

The acceptance tests register one line each through record_criterion; the
terminal summary prints them in criterion order so a full run always ends
with a compact pass/fail scoreboard.
"""

_CRITERIA = {}


def record_criterion(num, label, ok, detail):
    _CRITERIA[num] = (label, bool(ok), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        label, ok, detail = _CRITERIA[num]
        word = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"criterion {num:02d} {label:<34s} {word}  {detail}")

"""Shared test plumbing: the acceptance-criterion summary reporter.

Acceptance tests register one line per criterion via record_criterion; the
terminal summary prints them all, pass and fail alike, so the acceptance
status is readable at a glance even when unrelated tests dominate the
output.
"""

_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, ok: bool, detail: str = "") -> None:
    _RESULTS.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"{name}: {status}"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)

"""Shared pytest plumbing.

The acceptance tests register one verdict line per criterion here; the
terminal-summary hook replays them at the end of every run so the
PASS/FAIL status of each criterion is visible even when the test passed
and its output was captured.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)

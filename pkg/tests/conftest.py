"""Shared pytest wiring: a one-line verdict per numbered acceptance criterion."""
from __future__ import annotations

import re

_CRITERION = re.compile(r"test_criterion_(\d+)_([a-z0-9_]+)")
_results: dict[tuple[int, str], str] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if match is None:
        return
    key = (int(match.group(1)), match.group(2))
    if report.when == "call":
        _results[key] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup":
        if report.failed:
            _results[key] = "FAIL"
        elif report.skipped:
            _results[key] = "SKIP"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, slug in sorted(_results):
        verdict = _results[(number, slug)]
        terminalreporter.write_line(
            f"criterion {number} ({slug.replace('_', ' ')}): {verdict}"
        )

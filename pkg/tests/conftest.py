"""Prints one PASS/FAIL summary line per end-to-end guarantee after the run."""

import re

_PATTERN = re.compile(r"test_acceptance\.py::test_(c\d+)_([A-Za-z0-9_]+)")
_RESULTS = {}


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if m is None:
        return
    key = m.group(1)
    label = m.group(2).replace("_", "-")
    prior = _RESULTS.get(key)
    if report.failed or report.skipped:
        _RESULTS[key] = (label, "FAIL")
    elif report.when == "call" and (prior is None or prior[1] != "FAIL"):
        _RESULTS[key] = (label, "PASS")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("guarantee summary")
    for key in sorted(_RESULTS):
        label, outcome = _RESULTS[key]
        terminalreporter.write_line(f"ACCEPTANCE {key} {label}: {outcome}")

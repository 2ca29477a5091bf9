"""Shared fixtures and the acceptance summary printed after the run."""
from __future__ import annotations

from collections import defaultdict

import pytest

CRITERIA = {
    1: "irrational-ray round trip",
    2: "tangent-ray layer stripping round trip",
    3: "triangular field identity and weight factorization",
    4: "delta-ball fields: exact lift and numeric convergence",
    5: "star-transform layer stripping round trip",
    6: "branch counterexample",
    7: "matrix core",
    8: "exact geometry",
}

_outcomes: dict = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[marker.args[0]].append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        runs = _outcomes.get(n)
        if not runs:
            status, detail = "NOT RUN", ""
        else:
            failed = [name for name, ok in runs if not ok]
            status = "FAIL" if failed else "PASS"
            detail = f" ({len(runs) - len(failed)}/{len(runs)} checks)"
            if failed:
                detail += " failing: " + ", ".join(failed)
        terminalreporter.write_line(f"criterion {n}: {status:<7} {title}{detail}")

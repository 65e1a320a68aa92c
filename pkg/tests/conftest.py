from __future__ import annotations

import pytest

from asploop import fixtures
from asploop.gateway import SolverGateway


@pytest.fixture(scope="session")
def gateway():
    return SolverGateway()


@pytest.fixture(scope="session")
def corpus():
    return fixtures.puzzles()


@pytest.fixture(scope="session")
def event():
    return fixtures.puzzle("event_planning")


@pytest.fixture(scope="session")
def event_ref():
    return fixtures.reference_blocks("event_planning")


# --------------------------------------------------------------------------
# One summary line per acceptance criterion at the end of the run

_ACCEPTANCE: dict[str, object] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _ACCEPTANCE[report.nodeid] = report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE):
        report = _ACCEPTANCE[nodeid]
        if report.passed:
            status = "PASS"
        elif report.skipped:
            status = "SKIP"
        else:
            status = "FAIL"
        name = nodeid.split("::", 1)[1]
        terminalreporter.write_line(f"{status}  {name}  ({report.duration:.2f}s)")

from __future__ import annotations

import pytest

from flowrack.rack import RackStateMatrix

from helpers import CASE_RACK, CASE_REQUEST, CASE_SELECTION

_acceptance: dict[str, str] = {}


@pytest.fixture
def case_rack() -> RackStateMatrix:
    return RackStateMatrix.from_rows(CASE_RACK, 10)


@pytest.fixture
def case_request() -> tuple[int, ...]:
    return CASE_REQUEST


@pytest.fixture
def case_selection():
    return CASE_SELECTION


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance, key=lambda s: int(s.split(".")[0])):
        terminalreporter.write_line(f"{_acceptance[label]}  {label}")

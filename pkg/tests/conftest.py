import pytest

from obsnet.trace import Trace

import report


@pytest.fixture
def trace():
    return Trace("trace")


def pytest_terminal_summary(terminalreporter):
    if not report.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(report.RESULTS, key=lambda k: int(k[1:])):
        terminalreporter.write_line(report.RESULTS[key])

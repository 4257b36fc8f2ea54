import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.failed:
        _ACCEPTANCE[n] = report.outcome if not report.failed else "failed"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        verdict = "PASS" if _ACCEPTANCE[n] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}")

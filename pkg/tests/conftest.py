"""Prints one pass/fail line per acceptance criterion at the end of the run."""

_results: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        prev = _results.get(name, True)
        _results[name] = prev and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_results):
        number, _, title = name[len("test_criterion_"):].partition("_")
        status = "PASS" if _results[name] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  ({title.replace('_', ' ')})")

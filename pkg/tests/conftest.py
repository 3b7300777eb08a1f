"""Collects acceptance outcomes and prints one line per criterion."""
import pytest

_CRITERIA: dict[int, list[str]] = {}
_DETAILS: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA.setdefault(marker, []).append(report.outcome)
    for name, value in report.user_properties:
        if name == "detail":
            _DETAILS.setdefault(marker, []).append(value)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report.criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        outcomes = _CRITERIA[n]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        detail = "; ".join(dict.fromkeys(_DETAILS.get(n, [])))
        terminalreporter.write_line(f"criterion {n}: {status}" + (f" ({detail})" if detail else ""))

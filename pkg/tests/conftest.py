"""Collects the outcome of every ``@pytest.mark.criterion`` test and prints one
PASS/FAIL line per criterion at the end of the run."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        passed = report.outcome == "passed"
        prev = _RESULTS.get(number)
        detail = getattr(item, "criterion_detail", "")
        _RESULTS[number] = (title, (prev is None or prev[1]) and passed, detail if passed else _short(report))


def _short(report):
    text = str(report.longrepr or "").strip().splitlines()
    errs = [ln for ln in text if ln.startswith("E ")]
    return (errs[0][1:].strip() if errs else (text[-1] if text else ""))[:160]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, detail = _RESULTS[number]
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        tr.write_line(line + (f"  ({detail})" if detail else ""))

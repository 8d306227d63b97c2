import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}  # number -> {"title", "outcomes", "seconds"}


def _criterion(item):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return None
    return mark.args[0], mark.args[1]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    crit = _criterion(item)
    if crit is None:
        return
    number, title = crit
    entry = _CRITERIA.setdefault(number, {"title": title, "outcomes": [], "seconds": 0.0})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["outcomes"].append(report.outcome)
        entry["seconds"] += report.duration


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outs = entry["outcomes"]
        if any(o == "failed" for o in outs):
            verdict = "FAIL"
        elif outs and all(o == "skipped" for o in outs):
            verdict = "SKIP"
        else:
            skipped = sum(o == "skipped" for o in outs)
            verdict = f"PASS ({skipped} part skipped)" if skipped else "PASS"
        terminalreporter.write_line(
            f"criterion {number}: {verdict}  {entry['title']}  ({entry['seconds']:.1f}s)")

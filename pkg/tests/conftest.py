import os
from collections import OrderedDict

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_criteria = OrderedDict()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "passed": 0, "failed": []})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if hasattr(report, "wasxfail") and report.skipped:
            entry["failed"].append(f"{item.name} (known unattainable)")
        elif report.failed:
            entry["failed"].append(item.name)
        elif report.passed:
            entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        verdict = "FAIL" if e["failed"] else "PASS"
        n = e["passed"] + len(e["failed"])
        line = f"criterion {number:>2} {verdict}  {e['title']}  ({e['passed']}/{n} checks)"
        tr.write_line(line)
        for name in e["failed"]:
            tr.write_line(f"    failing: {name}")

import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance bookkeeping: criterion number -> {"title", "outcomes", "details"}
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


@pytest.fixture
def record(request):
    """Attach a one-line measurement to the criterion the test belongs to."""
    mark = request.node.get_closest_marker("criterion")

    def add(text):
        _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "outcomes": [], "details": []})
        _CRITERIA[mark.args[0]]["details"].append(text)
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "outcomes": [], "details": []})
    entry["outcomes"].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        ok = bool(e["outcomes"]) and all(p for _, p in e["outcomes"])
        failed = [name for name, p in e["outcomes"] if not p]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {e['title']}"
                      + (f"  (failed: {', '.join(failed)})" if failed else ""))
        for d in e["details"]:
            tr.write_line(f"    {d}")

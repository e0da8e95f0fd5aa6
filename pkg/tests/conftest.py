import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, list[str]] = {}
_CRIT_RE = re.compile(r"test_criterion_(\d+)")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = _CRIT_RE.search(item.name)
    if m and (rep.when == "call" or rep.outcome != "passed"):
        _CRITERIA.setdefault(int(m.group(1)), []).append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        outcomes = _CRITERIA[k]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} ({len(outcomes)} checks)")

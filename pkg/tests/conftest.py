from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings

from qmtree.metaspace import build_metaspace, uniform_q
from qmtree.vorobev import VorobevParams, build_vorobev

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

HALF = Fraction(1, 2)

_acceptance: dict[int, dict] = {}


@pytest.fixture(scope="session")
def table2():
    return build_vorobev(VorobevParams(HALF, HALF, HALF))


@pytest.fixture(scope="session")
def table2_ms(table2):
    return build_metaspace(table2, uniform_q(table2.contexts))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n = marker.args[0]
    entry = _acceptance.setdefault(n, {"title": marker.kwargs.get("title", ""), "ok": True, "ran": False})
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        e = _acceptance[n]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {e['title']}")

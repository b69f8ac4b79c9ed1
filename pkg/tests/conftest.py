import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from oracles import Recorder  # noqa: E402

from byrdscope.engine import EngineOptions, solve  # noqa: E402
from byrdscope.lang import parse_program, parse_query  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def record(program, query, **options):
    """Run ``query`` and return ``(events, outcome)``."""
    if isinstance(program, str):
        program = parse_program(program)
    if isinstance(query, str):
        query = parse_query(query)
    rec = Recorder()
    outcome = solve(program, query, EngineOptions(**options), rec)
    return rec.events, outcome


# -- acceptance summary ------------------------------------------------------

_acceptance: dict = {}
_notes: dict = {}


@pytest.fixture
def report(request):
    """Attach a one-line note to this test's acceptance summary line."""
    def add(text):
        _notes[request.node.name] = text
        print(text)
    return add


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::")[-1]
        if report.failed or name not in _acceptance:
            _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance.items():
        mark = "PASS" if outcome == "passed" else "FAIL"
        note = f"  ({_notes[name]})" if name in _notes else ""
        terminalreporter.write_line(f"[{mark}] {name}{note}")

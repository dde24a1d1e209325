import sys
from fractions import Fraction
from pathlib import Path

import hypothesis.strategies as st
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).resolve().parent))

settings.register_profile("default", max_examples=200, deadline=None)
settings.register_profile("fast", max_examples=25, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).resolve().parent.parent / "data"


def grid_bids(max_k=12):
    """Bids j/k with small k, so ties and boundary values come up often."""
    return st.integers(1, max_k).flatmap(lambda k: st.integers(0, k).map(lambda j: Fraction(j, k)))


def bids_strategy(min_size=1, max_size=6):
    return st.lists(st.one_of(grid_bids(), st.fractions(0, 1, max_denominator=1000)), min_size=min_size, max_size=max_size)


@pytest.fixture
def data_dir():
    return DATA


_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, text = marker.args
    passed, _ = _ACCEPTANCE.get(number, (True, text))
    _ACCEPTANCE[number] = (passed and report.passed, text)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, text = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}")

"""Shared fixtures: cached persistence curves and the acceptance summary."""

import warnings

import pytest

from airy1_persistence.persistence import fit_window, persistence_curve

ACCEPTANCE_LINES = []


class CurveCache:
    """Curves on the fit window of each threshold, computed once per session."""

    def __init__(self):
        self._store = {}

    def get(self, c, route="B"):
        key = (float(c), route)
        if key not in self._store:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                self._store[key] = persistence_curve(c, fit_window(c), route=route)
        return self._store[key]


@pytest.fixture(scope="session")
def curves():
    return CurveCache()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


def pytest_collection_modifyitems(items):
    for item in items:
        if "curves" in getattr(item, "fixturenames", ()):
            item.add_marker(pytest.mark.slow)

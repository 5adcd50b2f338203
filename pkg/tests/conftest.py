import os
import tempfile

import pytest

_RESULTS: dict = {}


def pytest_configure(config):
    # keep kernel tables out of the user's cache and make runs self-contained
    os.environ.setdefault("HLAB_CACHE_DIR", tempfile.mkdtemp(prefix="hlab-cache-"))


def pytest_runtest_logreport(report):
    marker = _MARKERS.get(report.nodeid)
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed"
        prev = _RESULTS.get(marker, True)
        _RESULTS[marker] = prev and ok


_MARKERS: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            _MARKERS[item.nodeid] = int(m.args[0])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status = "PASS" if _RESULTS[number] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)

import os
from pathlib import Path

import numpy as np
import pytest

GOLDEN = Path(__file__).parent / "golden"

# criterion id -> title, filled by tests marked with @pytest.mark.acceptance(id, title)
_CRITERIA = {}
_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id, title): end-to-end exit criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m and m.args:
            cid, title = m.args[0], m.args[1]
            _CRITERIA[cid] = title
            item.user_properties.append(("criterion", cid))


def pytest_runtest_logreport(report):
    cid = dict(report.user_properties).get("criterion")
    if cid is None:
        return
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed"
        _OUTCOMES.setdefault(cid, []).append(ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        results = _OUTCOMES.get(cid)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {cid:>2}: {status}  {_CRITERIA[cid]}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def golden():
    """Compare text to a golden file; set UPDATE_GOLDEN=1 to rewrite it."""

    def check(name, text):
        path = GOLDEN / name
        if os.environ.get("UPDATE_GOLDEN") or not path.exists():
            path.parent.mkdir(exist_ok=True)
            path.write_text(text)
        assert text == path.read_text()

    return check

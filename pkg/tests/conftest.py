import numpy as np
import pytest

from beltrami_decomp.mesh import build_domain


@pytest.fixture(scope="session")
def small():
    return build_domain(12, 10)


@pytest.fixture(scope="session")
def grid64():
    return build_domain(64, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def affine_map(domain, a, b, c, d, shift=0j):
    x, y = domain.vertices[:, 0], domain.vertices[:, 1]
    return (a * x + b * y) + 1j * (c * x + d * y) + shift


# ------------------------------------------------------------------------
# criterion summary: tests marked ``criterion(n, text)`` get one line each

def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    number, title = crit
    store = _CRITERIA.setdefault(number, {"title": title, "ok": True, "details": []})
    store["ok"] &= report.passed
    store["details"] += [v for k, v in report.user_properties if k == "detail"]


_CRITERIA = {}


@pytest.fixture(autouse=True)
def _criterion_tag(request, record_property):
    marker = request.node.get_closest_marker("criterion")
    if marker is not None:
        record_property("criterion", tuple(marker.args))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        verdict = "PASS" if entry["ok"] else "FAIL"
        tr.write_line(f"criterion {number}: {verdict}  {entry['title']}")
        for d in entry["details"]:
            tr.write_line(f"    {d}")

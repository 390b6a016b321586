import numpy as np
import pytest

from infoflow import _pykernels

try:
    from infoflow import _ckernels
except ImportError:  # extension not built
    _ckernels = None

KERNELS = [pytest.param(_pykernels, id="python")]
KERNELS.append(
    pytest.param(_ckernels, id="cython", marks=pytest.mark.skipif(_ckernels is None, reason="extension not built"))
)

_results = pytest.StashKey[dict]()


@pytest.fixture(params=KERNELS)
def kernel(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20071)


def pytest_configure(config):
    config.stash[_results] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        item.config.stash[_results].setdefault(number, []).append((title, status, detail, item.name))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_results]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        for title, status, detail, name in results[number]:
            line = f"criterion {number} [{status}] {title} ({name})"
            if detail:
                line += f" :: {detail}"
            terminalreporter.write_line(line)

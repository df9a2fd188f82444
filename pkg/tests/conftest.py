import pytest

from coarse_scope import kernels

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        # a parametrized criterion passes only if every case passes
        prev = _results.get(num, (title, "PASS"))[1]
        _results[num] = (title, "PASS" if rep.passed and prev == "PASS" else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section(f"acceptance criteria (kernel backend: {kernels.BACKEND})")
    for num in sorted(_results):
        title, status = _results[num]
        terminalreporter.write_line(f"{status} criterion {num}: {title}")

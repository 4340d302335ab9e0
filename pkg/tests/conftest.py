import pytest

_LINES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.fixture
def report(request):
    """``report(passed, detail)`` records the verdict line of the marked criterion."""
    k = request.node.get_closest_marker("criterion").args[0]

    def _report(passed, detail):
        _LINES[k] = f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(_LINES[k])
        return passed
    return _report


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark and rep.when == "call" and rep.failed and mark.args[0] not in _LINES:
        msg = str(call.excinfo.value).splitlines()[0] if call.excinfo else "failed"
        _LINES[mark.args[0]] = f"criterion {mark.args[0]:>2}: FAIL  {msg}"


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_LINES):
            terminalreporter.write_line(_LINES[k])

import pytest

from t2script import Interpreter, VirtualClock


def wrap(body: str, name: str = "main") -> str:
    """Wrap top-level code in a public function bound to on_load."""
    return f"#function {name} public() << on_load\n{body}\n#end {name}\n"


def run_on_load(source: str, **kw):
    interp = Interpreter(host_events=["on_load"], **kw)
    interp.load_source(source)
    return interp, interp.trigger("on_load")


@pytest.fixture
def interp():
    return Interpreter(seed=0)


@pytest.fixture
def vinterp():
    return Interpreter(seed=0, clock=VirtualClock())


# -- acceptance reporting -----------------------------------------------------

CRITERIA = {
    1: "golden listings",
    2: "result/error protocol",
    3: "grammar properties",
    4: "operator oracle",
    5: "contract enforcement",
    6: "envrs pipeline",
    7: "embedding smoke test",
}
_verdicts: dict[int, bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    n = marker.args[0]
    if report.when == "setup" and report.passed:
        return
    _verdicts[n] = _verdicts.get(n, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n, label in CRITERIA.items():
        if n in _verdicts:
            verdict = "PASS" if _verdicts[n] else "FAIL"
            terminalreporter.write_line(f"criterion {n} ({label}): {verdict}")

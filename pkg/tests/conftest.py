import pytest

CRITERIA = {
    1: "cross-engine agreement on the standard grid",
    2: "critical-point constants",
    3: "criticality behaviour (oracle)",
    4: "no-STE flatline",
    5: "EG peak bound",
    6: "maximal EE entanglement and its period",
    7: "measure consistency",
    8: "conservation suite",
    9: "GG lumbar region",
    10: "figure determinism",
}

_outcomes: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


def pytest_runtest_logreport(report):
    k = getattr(report, "criterion", None)
    if k is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(k, []).append((report.nodeid.split("::")[-1], report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k, title in CRITERIA.items():
        results = _outcomes.get(k)
        if not results:
            terminalreporter.write_line(f"criterion {k:2d}: NOT RUN  {title}")
            continue
        failed = [name for name, outcome in results if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        detail = f"  (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {title}{detail}")

import pytest

from runnerpcg import RunConfig

CRITERIA = {
    "AC1": "spawner saturation bound",
    "AC2": "scan budget and frame-rate independence",
    "AC3": "agent look-ahead ordering",
    "AC4": "auto-removal lowers encounters",
    "AC5": "metric identities",
    "AC6": "kinematics numerics",
    "AC7": "geometry oracle equivalence",
    "AC8": "nav surface semantics",
    "AC9": "byte-identical replays",
    "AC10": "reporter and PDF export",
    "AC11": "unmeasured quantities covered by property suites",
}

_outcomes: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(criterion): test belongs to an acceptance criterion")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(crit, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        rep.criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for crit, title in CRITERIA.items():
        results = _outcomes.get(crit)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"{status} {crit} {title} ({len(results or [])} checks)")


@pytest.fixture
def short_cfg():
    return RunConfig(run_length=600.0, seed=3)

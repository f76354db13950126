import pytest

CRITERIA = {
    1: "gradient oracle",
    2: "SVD closed forms",
    3: "Muon closed form",
    4: "GD imbalance",
    5: "Muon balance at K=999",
    6: "sign-descent (Adam) instability",
    7: "multi-step structure",
    8: "Newton-Schulz accuracy",
    9: "spectral metrics",
    10: "power-law generator",
    11: "dual-norm identities",
    12: "determinism",
}

_outcomes: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    n = getattr(report, "criterion", None)
    if n is None:
        return
    _outcomes.setdefault(n, []).append((report.nodeid.split("::")[-1], report.passed))


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
    for n in sorted(CRITERIA):
        runs = _outcomes.get(n)
        if not runs:
            continue
        failed = [name for name, ok in runs if not ok]
        status = "PASS" if not failed else "FAIL"
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n:2d} {status}: {CRITERIA[n]} [{len(runs)} tests]{extra}")

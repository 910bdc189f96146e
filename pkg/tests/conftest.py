import pytest

from ctype_fhc.operator import derive_structure
from ctype_fhc.schedule import Schedule


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion n")
    config._criteria = {}


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    table = report.config_criteria
    n, text = crit
    ok = report.passed if report.when == "call" else not report.failed
    prev = table.get(n, (text, True))
    table[n] = (text, prev[1] and ok)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = tuple(m.args)
        rep.config_criteria = item.config._criteria


def pytest_terminal_summary(terminalreporter, config):
    table = config._criteria
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(table):
        text, ok = table[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def canonical():
    return derive_structure(Schedule.canonical(K_max=3))


@pytest.fixture(scope="session")
def canonical2():
    return derive_structure(Schedule.canonical(K_max=2))


@pytest.fixture(scope="session")
def toy():
    return derive_structure(Schedule.geometric(4, K_max=9, tau={"rule": "synthesized", "L": 3}))


@pytest.fixture(scope="session")
def toy_small():
    """Geometric(4) with an affine τ, small enough for dense oracles."""
    return derive_structure(Schedule.geometric(4, K_max=3))

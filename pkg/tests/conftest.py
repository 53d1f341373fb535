import numpy as np
import pytest

from permsync.bench import SynthConfig, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def noiseless_33():
    return generate(SynthConfig(3, 3, 1.0, 0.0, seed=11))


_CRITERIA: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the outcome is read from the test report."""
    info = {}
    yield info
    rep = getattr(request.node, "rep_call", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    _CRITERIA.append(f"[{status}] {info.get('name', request.node.name)}: {info.get('detail', '')}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dixon.core import ProblemSpec
from dixon.validation import acceptance_specs

settings.register_profile("dixon", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dixon")


@pytest.fixture
def spec_half():
    return ProblemSpec(0.5, 1.0, 0.5)


@pytest.fixture(params=range(3), ids=["a0.5", "a1", "a2.5"])
def acceptance_spec(request):
    return acceptance_specs()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request, capsys):
    """report(k, ok, detail): print one PASS/FAIL line now and again in the terminal summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def report(k, ok, detail):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        store[k] = line
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE_KEY, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for k in sorted(store):
            terminalreporter.write_line(store[k])

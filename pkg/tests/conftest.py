import numpy as np
import pytest

from cloudeff import kernels

ACCEPTANCE_RESULTS = []


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    """Each kernel implementation that can be imported here."""
    return kernels.available_backends()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

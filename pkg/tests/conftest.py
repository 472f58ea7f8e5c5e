import os

import numpy as np
import pytest

from cceval import harness
from cceval.kernels import backends

#: Lines recorded by the acceptance gate, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=sorted(backends()))
def backend(request):
    return backends()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_grid(tmp_path_factory):
    """Two-scene, five-condition, four-illuminant scenegen grid on disk."""
    root = tmp_path_factory.mktemp("grid")
    return harness.build_synthetic_grid(root)


@pytest.fixture(scope="session")
def grid_manifest(synth_grid):
    return harness.load_manifest(synth_grid)


@pytest.fixture
def no_white_point_env(monkeypatch):
    monkeypatch.delenv("CCEVAL_WHITE_POINT", raising=False)
    return os.environ

import json
from pathlib import Path

import numpy as np
import pytest

from drwalk.directions import DirectionSet, TransitionKernel

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

REFERENCE_KERNEL = [[0.4, 0.3, 0.1, 0.2],
                    [0.3, 0.3, 0.2, 0.2],
                    [0.35, 0.25, 0.2, 0.2],
                    [0.4, 0.2, 0.1, 0.3]]

# acceptance lines collected during the session, printed at the end
ACCEPTANCE: list[str] = []


@pytest.fixture
def ref_dirs():
    return DirectionSet.axes(2)


@pytest.fixture
def ref_kernel():
    return TransitionKernel(REFERENCE_KERNEL)


@pytest.fixture
def line_dirs():
    return DirectionSet(np.array([[1.0], [-1.0]]))


@pytest.fixture
def config_dict():
    def load(name):
        return json.loads((CONFIGS / name).read_text())
    return load


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

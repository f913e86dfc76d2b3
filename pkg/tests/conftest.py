import sys
from pathlib import Path

import pytest

sys.path.append(str(Path(__file__).parent.parent))

from src.model import ModelParams  # noqa: E402


@pytest.fixture
def supercritical_set():
    return ModelParams(a=2.16, b=0.0222, capacity=100, tau1=10, tau2=70)


@pytest.fixture
def subcritical_set():
    return ModelParams(a=0.87, b=0.0222, capacity=100, tau1=10, tau2=15)


@pytest.fixture
def reference_sets():
    return [
        ModelParams(a=2.16, b=0.0222, capacity=100, tau1=10, tau2=70),
        ModelParams(a=0.87, b=0.0222, capacity=100, tau1=10, tau2=15),
        ModelParams(a=1.17, b=0.736, capacity=100, tau1=10, tau2=20),
    ]

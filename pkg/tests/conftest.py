"""
Shared fixtures for the magnon gadget lab tests.
"""

import sys
from pathlib import Path

import pytest

# Repository root holds the flat modules
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from data_models import FMParams, GadgetSpec  # noqa: E402


@pytest.fixture
def small_gadget() -> GadgetSpec:
    return GadgetSpec(delta=1.0, epsilon=0.02, alpha=0.02, gamma=0.02)


@pytest.fixture
def one_magnon() -> FMParams:
    return FMParams(J=1.0, S=0.5)

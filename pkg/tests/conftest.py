"""Shared fixtures: domains are session-scoped because mask construction
(and the distance transforms behind them) dominates unit-test runtime."""
from __future__ import annotations

import pytest

from bvlab.domains import make_domain


@pytest.fixture(scope="session")
def square128():
    return make_domain("unit_square", h=1 / 128)


@pytest.fixture(scope="session")
def square64():
    return make_domain("unit_square", h=1 / 64)


@pytest.fixture(scope="session")
def disk64():
    return make_domain("disk", h=1 / 64, radius=0.5)


@pytest.fixture(scope="session")
def cusp256():
    return make_domain("exterior_cusp", h=1 / 256)


@pytest.fixture(scope="session")
def slit128():
    return make_domain("slit_disk", h=1 / 128)

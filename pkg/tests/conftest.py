"""Shared fixtures: stock walker and a couple of cached simulation runs.

Simulations are deterministic, so session-scoped telemetry fixtures are safe
to share between tests.
"""
import math

import numpy as np
import pytest

from mugatu import GaitCommand, Telemetry, simulate, stock_params
from mugatu.dynamics import COLUMNS


@pytest.fixture(scope="session")
def stock():
    return stock_params()


@pytest.fixture(scope="session")
def stable_telemetry(stock):
    """A stable walking trial at 1.5 Hz / 33.4 deg, 40 s."""
    cmd = GaitCommand(math.radians(33.4), math.radians(33.4), 1.5)
    return simulate(stock, cmd, 40.0)


@pytest.fixture(scope="session")
def fast_telemetry(stock):
    """The high-speed operating point: 1.5 Hz / 42 deg, 40 s."""
    cmd = GaitCommand(math.radians(42.0), math.radians(42.0), 1.5)
    return simulate(stock, cmd, 40.0)


def synthetic_telemetry(t, sample_rate, fell=False, fall_time=None, **series):
    """Build a Telemetry with given columns; everything else stays zero."""
    rows = np.zeros((len(t), len(COLUMNS)))
    rows[:, 0] = t
    for name, values in series.items():
        rows[:, COLUMNS.index(name)] = values
    return Telemetry(sample_rate=sample_rate, samples=rows,
                     fell=fell, fall_time=fall_time)

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import tickvol as tv


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)


@pytest.fixture
def small_series(rng):
    """A 60-tick series on T=100 with mild noise, feasible for H=2, N=5."""
    times = np.sort(rng.uniform(0.5, 100.0, size=60))
    prices = np.cumsum(rng.normal(0.0, 0.01, size=60))
    return tv.TickSeries(horizon_T=100.0, times=times, log_prices=prices)


@pytest.fixture
def constant_scenario_series():
    """Simulated constant-parameter series reused across estimator tests."""
    return tv.simulate_series(
        tv.ConstantCurve(1.0), tv.ConstantCurve(1.3), 20000.0, seed=1234,
        noise=tv.NoiseModel(omega=0.001),
    )

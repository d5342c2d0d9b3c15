"""The observed tick series: arrival times with aligned log-prices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .validation import as_float_array


@dataclass(frozen=True, eq=False)
class TickSeries:
    """Strictly increasing arrival times in (0, T] with aligned log-prices.

    ``horizon_T`` is the clock-time span in seconds; rescaled time is
    u = t / T.  ``clean_flag`` records whether the ingestion pipeline
    produced the series.
    """

    horizon_T: float
    times: np.ndarray
    log_prices: np.ndarray
    clean_flag: bool = False

    def __post_init__(self):
        T = float(self.horizon_T)
        if not np.isfinite(T) or T <= 0:
            raise ConfigError(f"horizon_T must be positive and finite, got {T!r}")
        times = as_float_array(self.times, "times").copy()
        prices = as_float_array(self.log_prices, "log_prices").copy()
        if times.size != prices.size:
            raise ConfigError(
                f"times and log_prices lengths differ: {times.size} vs {prices.size}"
            )
        if times.size:
            if not np.all(np.diff(times) > 0):
                raise ConfigError("times must be strictly increasing")
            if times[0] <= 0 or times[-1] > T:
                raise ConfigError("every arrival time must lie in (0, horizon_T]")
        times.setflags(write=False)
        prices.setflags(write=False)
        object.__setattr__(self, "horizon_T", T)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "log_prices", prices)

    def __len__(self) -> int:
        return self.times.size

    @property
    def rescaled_times(self) -> np.ndarray:
        """Arrival times mapped to u = t / T in (0, 1]."""
        return self.times / self.horizon_T

    def with_log_prices(self, log_prices: np.ndarray) -> "TickSeries":
        return TickSeries(self.horizon_T, self.times, log_prices, self.clean_flag)

"""Spot estimators: trading intensity, pre-averaged clock-time and tick-time
volatility, their product, filtered realized volatility, and the noise
variance.

Conventions
-----------
* All estimators use the rescaled (infill) normalization as canonical; for
  per-clock-time presentation divide volatility estimates by the horizon T
  (``presentation_scale``).
* Bandwidths are per-side fractions of rescaled time: the clock kernel at
  bandwidth b covers (u0 - b, u0 + b), i.e. 2bT seconds of data.
* Evaluation points must be interior; boundary bias is deliberately not
  handled.
* Pre-averaging windows that would run past the series end are skipped
  (dropped from the sum), never truncated; the tick-time estimator instead
  demands its exact window and raises with the deficit.
* Bias-corrected estimates may come out negative and are returned as-is;
  flooring is a presentation concern (see the CLI's log columns).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import BoundaryError, ConfigError, DegenerateDivisionError, WindowError
from .kernels import KernelSpec, PreAvgWeight
from .series import TickSeries
from .validation import as_float_array, check_fraction, check_int_at_least

ESTIMATOR_TAGS = (
    "intensity",
    "clock_pavg",
    "tick_pavg",
    "decomposed",
    "noise_var",
    "realized_vol",
)


def a1_tick_window(clock_bandwidth: float, n_ticks: int) -> int:
    """Tick window matched to the clock bandwidth: floor(b * n_ticks).

    With M = b*T seconds per side, floor(M * n_ticks / T) pre-averaged terms
    per side cover (on average) the same range in tick time.
    """
    return int(math.floor(clock_bandwidth * n_ticks))


@dataclass(frozen=True, eq=False)
class EstimatorConfig:
    """Bandwidths, windows, kernels and grid shared by all estimators."""

    intensity_bandwidth: float = 0.05
    clock_bandwidth: float = 0.05
    tick_window: int = 100
    block_size: int = 15
    intensity_kernel: KernelSpec = KernelSpec("epanechnikov")
    clock_kernel: KernelSpec = KernelSpec("epanechnikov")
    tick_kernel: KernelSpec = KernelSpec("epanechnikov")
    weight: PreAvgWeight | None = None
    grid: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        check_fraction(self.intensity_bandwidth, "intensity_bandwidth")
        check_fraction(self.clock_bandwidth, "clock_bandwidth")
        H = check_int_at_least(self.block_size, 2, "block_size")
        N = check_int_at_least(self.tick_window, H, "tick_window")
        object.__setattr__(self, "block_size", H)
        object.__setattr__(self, "tick_window", N)
        weight = self.weight if self.weight is not None else PreAvgWeight(H)
        if weight.H != H:
            raise ConfigError(
                f"weight block size {weight.H} != block_size {H}"
            )
        object.__setattr__(self, "weight", weight)
        grid = as_float_array(self.grid, "grid")
        lo = max(self.intensity_bandwidth, self.clock_bandwidth)
        if grid.size and not np.all((grid > lo) & (grid < 1.0 - lo)):
            raise ConfigError(
                f"grid points must lie strictly inside ({lo}, {1 - lo})"
            )
        object.__setattr__(self, "grid", grid)

    def to_dict(self) -> dict:
        return {
            "intensity_bandwidth": self.intensity_bandwidth,
            "clock_bandwidth": self.clock_bandwidth,
            "tick_window": self.tick_window,
            "block_size": self.block_size,
            "intensity_kernel": self.intensity_kernel.kind,
            "clock_kernel": self.clock_kernel.kind,
            "tick_kernel": self.tick_kernel.kind,
            "grid": [float(u) for u in self.grid],
        }


@dataclass(frozen=True, eq=False)
class CurveEstimate:
    """A curve evaluated on a grid, with one value or reason code per point."""

    grid: np.ndarray
    values: np.ndarray
    reason_codes: tuple
    estimator_tag: str
    config: dict

    def __post_init__(self):
        if self.estimator_tag not in ESTIMATOR_TAGS:
            raise ConfigError(f"unknown estimator tag {self.estimator_tag!r}")
        if not (len(self.grid) == len(self.values) == len(self.reason_codes)):
            raise ConfigError("grid, values and reason_codes must align")

    def to_csv(self, path, log_floor: float | None = None) -> None:
        """Columns u,value,reason_code plus log_value when a floor is given.

        Written atomically (temp file + rename).
        """
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            header = "u,value,reason_code"
            if log_floor is not None:
                header += ",log_value"
            fh.write(header + "\n")
            for u, v, code in zip(self.grid, self.values, self.reason_codes):
                u, v = float(u), float(v)
                row = f"{u!r},{'' if math.isnan(v) else repr(v)},{code or ''}"
                if log_floor is not None:
                    logv = "" if math.isnan(v) else repr(math.log(max(v, log_floor)))
                    row += f",{logv}"
                fh.write(row + "\n")
        os.replace(tmp, path)

    def to_json(self) -> str:
        return json.dumps(
            {
                "estimator": self.estimator_tag,
                "config": self.config,
                "points": [
                    {"u": float(u), "value": None if math.isnan(v) else float(v),
                     "reason_code": code}
                    for u, v, code in zip(self.grid, self.values, self.reason_codes)
                ],
            },
            indent=2,
        )


# ---------------------------------------------------------------------------
# Internal window machinery
# ---------------------------------------------------------------------------

def _kernel_window(series: TickSeries, u0: float, bandwidth: float):
    """Index range [lo, hi) of ticks with |t_i - u0 T| < bandwidth * T."""
    T = series.horizon_T
    lo = int(np.searchsorted(series.times, (u0 - bandwidth) * T, side="right"))
    hi = int(np.searchsorted(series.times, (u0 + bandwidth) * T, side="left"))
    return lo, hi


def _check_interior(u0: float, bandwidth: float) -> None:
    if not (bandwidth < u0 < 1.0 - bandwidth):
        raise BoundaryError(
            f"u0={u0} outside the interior ({bandwidth}, {1 - bandwidth}); "
            "boundary bias is not handled"
        )


def _pav_over(dy: np.ndarray, lo: int, hi: int, weight: PreAvgWeight) -> np.ndarray:
    """Pre-averaged increments for start ticks lo..hi-1 (windows guaranteed
    to fit by the caller)."""
    if hi <= lo:
        return np.empty(0)
    seg = dy[lo : hi + weight.H - 2]
    if seg.size != hi - lo + weight.H - 2:
        raise WindowError(
            f"pre-averaging range [{lo}, {hi}) runs past the series end",
            deficit_right=hi - lo + weight.H - 2 - seg.size,
        )
    return np.correlate(seg, weight.g_values, mode="valid")


# ---------------------------------------------------------------------------
# Pointwise estimators
# ---------------------------------------------------------------------------

def estimate_intensity(series: TickSeries, u0: float, cfg: EstimatorConfig) -> float:
    """Kernel estimate of the trading intensity at u0.

    (1/(bT)) * sum_i Kf((t_i - u0 T) / (b T)) with b the intensity bandwidth.
    """
    bw = cfg.intensity_bandwidth
    _check_interior(u0, bw)
    T = series.horizon_T
    lo, hi = _kernel_window(series, u0, bw)
    if hi <= lo:
        return 0.0
    x = (series.times[lo:hi] - u0 * T) / (bw * T)
    return float(np.sum(cfg.intensity_kernel(x))) / (bw * T)


def estimate_realized_vol(series: TickSeries, u0: float, cfg: EstimatorConfig) -> float:
    """Filtered realized volatility: (1/b) * sum_i K(.)(Y_i - Y_{i-1})^2.

    Under noise this estimates 2 T omega^2 lambda(u0) plus the signal term
    sigma^2(u0) lambda(u0); it feeds the noise-variance ratio.
    """
    bw = cfg.clock_bandwidth
    _check_interior(u0, bw)
    T = series.horizon_T
    lo, hi = _kernel_window(series, u0, bw)
    lo = max(lo, 1)  # the i = 0 tick has no backward increment
    if hi <= lo:
        return 0.0
    x = (series.times[lo:hi] - u0 * T) / (bw * T)
    dy = series.log_prices[lo:hi] - series.log_prices[lo - 1 : hi - 1]
    return float(np.sum(cfg.clock_kernel(x) * dy * dy)) / bw


def estimate_clock_vol_pavg(
    series: TickSeries, u0: float, cfg: EstimatorConfig, bias_correction: bool = True
) -> float:
    """Pre-averaged clock-time volatility at u0 (bias-corrected).

    First term: (1/(bH g2)) sum_i K(.) (pre-averaged increment at i)^2 over
    every tick in the kernel window whose H-tick forward window fits in the
    series (blocks past the end are skipped).  Second term removes the noise
    bias: (sum_h2 / (2 b H g2)) sum_i K(.) (Y_i - Y_{i-1})^2.  May be
    negative; returned as-is.  ``bias_correction=False`` returns the first
    term alone (noise-biased upward).
    """
    bw = cfg.clock_bandwidth
    _check_interior(u0, bw)
    T = series.horizon_T
    w = cfg.weight
    H = w.H
    n = len(series)
    lo, hi = _kernel_window(series, u0, bw)

    # first term: start ticks whose pre-averaging window fits
    lo1, hi1 = lo, min(hi, n - H + 1)
    first = 0.0
    if hi1 > lo1:
        x = (series.times[lo1:hi1] - u0 * T) / (bw * T)
        pav = _pav_over(np.diff(series.log_prices), lo1, hi1, w)
        first = float(np.sum(cfg.clock_kernel(x) * pav * pav))
    first /= bw * H * w.g2
    if not bias_correction:
        return first

    # correction term over raw squared increments
    lo2, hi2 = max(lo, 1), hi
    corr = 0.0
    if hi2 > lo2:
        x = (series.times[lo2:hi2] - u0 * T) / (bw * T)
        dy = series.log_prices[lo2:hi2] - series.log_prices[lo2 - 1 : hi2 - 1]
        corr = float(np.sum(cfg.clock_kernel(x) * dy * dy))
    corr *= w.sum_h2 / (2.0 * bw * H * w.g2)
    return first - corr


def estimate_tick_vol_pavg(
    series: TickSeries, u0: float, cfg: EstimatorConfig, bias_correction: bool = True
) -> float:
    """Pre-averaged tick-time volatility at u0 (bias-corrected).

    Uses exactly N pre-averaged terms per side of i0 = first tick at or after
    u0*T, weighted by the tick kernel k((i - i0)/N); counted in ticks, so the
    value is invariant to any order-preserving deformation of the clock.
    ``bias_correction=False`` returns the first term alone.
    """
    w = cfg.weight
    H, N = w.H, cfg.tick_window
    T = series.horizon_T
    n = len(series)
    i0 = int(np.searchsorted(series.times, u0 * T, side="left"))
    if i0 >= n:
        raise WindowError(
            f"no arrival at or after u0*T={u0 * T}", deficit_right=N + H,
        )
    # lowest index needs a backward increment; highest needs a full H-window
    deficit_left = max(0, 1 - (i0 - N))
    deficit_right = max(0, (i0 + N) - (n - H))
    if deficit_left or deficit_right:
        raise WindowError(
            f"tick window [{i0 - N}, {i0 + N}] infeasible: short "
            f"{deficit_left} tick(s) on the left, {deficit_right} on the right",
            deficit_left=deficit_left,
            deficit_right=deficit_right,
        )
    idx = np.arange(i0 - N, i0 + N + 1)
    kw = cfg.tick_kernel((idx - i0) / N)
    dy_all = np.diff(series.log_prices)
    pav = _pav_over(dy_all, i0 - N, i0 + N + 1, w)
    first = float(np.sum(kw * pav * pav)) * T / (N * H * w.g2)
    if not bias_correction:
        return first
    dy = dy_all[idx - 1]
    corr = float(np.sum(kw * dy * dy)) * T * w.sum_h2 / (2.0 * N * H * w.g2)
    return first - corr


def estimate_decomposed_clock_vol(series: TickSeries, u0: float, cfg: EstimatorConfig) -> float:
    """Decomposition-based clock-time volatility: tick-time estimate times
    intensity estimate, both at u0."""
    return estimate_tick_vol_pavg(series, u0, cfg) * estimate_intensity(series, u0, cfg)


def estimate_noise_variance(series: TickSeries, u0: float, cfg: EstimatorConfig) -> float:
    """Noise variance via the ratio (filtered realized vol) / (2 T intensity)."""
    lam = estimate_intensity(series, u0, cfg)
    if lam <= 0.0:
        raise DegenerateDivisionError(
            f"intensity estimate at u0={u0} is {lam}; noise-variance ratio undefined"
        )
    return estimate_realized_vol(series, u0, cfg) / (2.0 * series.horizon_T * lam)


_POINTWISE = {
    "intensity": estimate_intensity,
    "clock_pavg": estimate_clock_vol_pavg,
    "tick_pavg": estimate_tick_vol_pavg,
    "decomposed": estimate_decomposed_clock_vol,
    "noise_var": estimate_noise_variance,
    "realized_vol": estimate_realized_vol,
}


def estimate_on_grid(
    series: TickSeries,
    cfg: EstimatorConfig,
    which: str,
    grid: Sequence[float] | None = None,
) -> CurveEstimate:
    """Evaluate one estimator on a grid; infeasible points become NaN with a
    reason code instead of failing the whole batch."""
    if which not in _POINTWISE:
        raise ConfigError(f"unknown estimator tag {which!r}; choose from {ESTIMATOR_TAGS}")
    fn = _POINTWISE[which]
    u_grid = as_float_array(cfg.grid if grid is None else grid, "grid")
    values = np.full(u_grid.size, np.nan)
    reasons: list[str | None] = [None] * u_grid.size
    for j, u0 in enumerate(u_grid):
        try:
            values[j] = fn(series, float(u0), cfg)
        except BoundaryError:
            reasons[j] = "boundary"
        except WindowError as exc:
            reasons[j] = (
                f"insufficient_ticks(left={exc.deficit_left},right={exc.deficit_right})"
            )
        except DegenerateDivisionError:
            reasons[j] = "zero_intensity"
    return CurveEstimate(
        grid=u_grid,
        values=values,
        reason_codes=tuple(reasons),
        estimator_tag=which,
        config=cfg.to_dict(),
    )


# ---------------------------------------------------------------------------
# Estimator-API wrapper
# ---------------------------------------------------------------------------

class SpotVolatilityCurve(BaseEstimator):
    """Scikit-learn style wrapper around the pointwise estimators.

    ``fit`` stores a validated tick series and resolves derived parameters
    (e.g. the tick window from the clock bandwidth when not given);
    ``predict`` evaluates the selected curve at rescaled times u in (0, 1),
    returning NaN wherever a point is infeasible.

    Parameters mirror :class:`EstimatorConfig`; ``estimator`` picks the
    curve: one of ``intensity``, ``clock_pavg``, ``tick_pavg``,
    ``decomposed``, ``noise_var``, ``realized_vol``.
    """

    def __init__(
        self,
        estimator: str = "decomposed",
        intensity_bandwidth: float = 0.05,
        clock_bandwidth: float = 0.05,
        tick_window: int | None = None,
        block_size: int = 15,
        kernel: str = "epanechnikov",
        presentation_scale: float = 1.0,
    ):
        self.estimator = estimator
        self.intensity_bandwidth = intensity_bandwidth
        self.clock_bandwidth = clock_bandwidth
        self.tick_window = tick_window
        self.block_size = block_size
        self.kernel = kernel
        self.presentation_scale = presentation_scale

    def fit(self, X: TickSeries, y=None):
        """Validate and store the series; resolve the estimator config."""
        if not isinstance(X, TickSeries):
            raise ConfigError("X must be a TickSeries")
        if self.estimator not in ESTIMATOR_TAGS:
            raise ConfigError(
                f"estimator must be one of {ESTIMATOR_TAGS}, got {self.estimator!r}"
            )
        tick_window = self.tick_window
        if tick_window is None:
            tick_window = max(a1_tick_window(self.clock_bandwidth, len(X)),
                              self.block_size)
        kern = KernelSpec(self.kernel)
        self.config_ = EstimatorConfig(
            intensity_bandwidth=self.intensity_bandwidth,
            clock_bandwidth=self.clock_bandwidth,
            tick_window=tick_window,
            block_size=self.block_size,
            intensity_kernel=kern,
            clock_kernel=kern,
            tick_kernel=kern,
        )
        self.series_ = X
        return self

    def predict(self, u) -> np.ndarray:
        """Curve values at rescaled times u; NaN at infeasible points."""
        self._check_fitted()
        est = estimate_on_grid(self.series_, self.config_, self.estimator, grid=np.atleast_1d(u))
        # the presentation scale converts volatility curves between the infill
        # and per-clock-time conventions; intensity and noise variance are
        # convention-free
        scaled = self.estimator in ("clock_pavg", "tick_pavg", "decomposed", "realized_vol")
        return est.values * (self.presentation_scale if scaled else 1.0)

    def estimate(self, u) -> CurveEstimate:
        """Like ``predict`` but returns the full CurveEstimate with reason codes."""
        self._check_fitted()
        return estimate_on_grid(self.series_, self.config_, self.estimator, grid=np.atleast_1d(u))

    def _check_fitted(self):
        if not hasattr(self, "series_"):
            raise ConfigError("this SpotVolatilityCurve instance is not fitted yet")

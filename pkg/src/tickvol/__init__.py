"""tickvol: spot volatility on tick data via the decomposition
clock-time volatility = tick-time volatility x trading intensity.

The package simulates time-changed price models with microstructure noise,
estimates the intensity / tick-time / clock-time volatility curves with
kernel and pre-averaging methods, and validates the estimators' central
limit behavior against closed-form targets by Monte Carlo.
"""

__version__ = "0.1.0"

from . import asymptotics
from .curves import ConstantCurve, CosineLogCurve, CurveSpec, TableCurve, curve_from_config
from .errors import (
    BoundaryError,
    ConfigError,
    DegenerateDivisionError,
    EmptySeriesError,
    FormatError,
    InvalidCurveError,
    InvalidWeightError,
    RoundingDomainError,
    ScenarioFailureError,
    TickVolError,
    WindowError,
)
from .estimators import (
    ESTIMATOR_TAGS,
    CurveEstimate,
    EstimatorConfig,
    SpotVolatilityCurve,
    a1_tick_window,
    estimate_clock_vol_pavg,
    estimate_decomposed_clock_vol,
    estimate_intensity,
    estimate_noise_variance,
    estimate_on_grid,
    estimate_realized_vol,
    estimate_tick_vol_pavg,
)
from .kernels import (
    KernelSpec,
    PreAvgWeight,
    eval_kernel,
    parabolic_weight,
    pre_averaged_increment,
    pre_averaged_increment_hform,
    pre_averaged_increments,
    weight_constants,
)
from .mc_harness import (
    ComparisonReport,
    MCReport,
    Scenario,
    compare_estimators,
    replication_seed,
    run_scenario,
    scenario_from_config,
)
from .series import TickSeries
from .simulate import (
    NoiseModel,
    apply_noise,
    sample_nhpp,
    sample_tick_path,
    simulate_series,
    substream,
)

__all__ = [name for name in dir() if not name.startswith("_")]

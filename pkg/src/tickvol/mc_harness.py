"""Monte Carlo harness: replicated simulate -> estimate runs with
standardized-error statistics compared against the closed-form targets.

Replications are independently seeded from the scenario's master seed, so
execution order (serial or process-parallel via the TICKVOL_THREADS
environment variable) never changes the report.
"""

from __future__ import annotations

import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from . import asymptotics
from .asymptotics import SmoothnessScenario
from .curves import CurveSpec, curve_from_config
from .errors import ConfigError, ScenarioFailureError, TickVolError
from .estimators import EstimatorConfig, a1_tick_window, _POINTWISE
from .kernels import KernelSpec, PreAvgWeight
from .simulate import NoiseModel, simulate_series

_REP_KEY = zlib.crc32(b"replication")


def replication_seed(master_seed: int, rep: int) -> int:
    """A 64-bit seed for one replication, derived from the master seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(_REP_KEY, int(rep)))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Scenario:
    """One Monte Carlo design: model curves, noise, horizon, estimator
    config, evaluation point, and replication budget."""

    name: str
    sigma2: CurveSpec
    intensity: CurveSpec
    noise: NoiseModel
    horizon_T: float
    config: EstimatorConfig
    u0: float
    replications: int
    master_seed: int
    smoothness: SmoothnessScenario | None = None
    rescaled: bool = True
    x0: float = 0.0
    overlap_adjusted: bool = False

    def __post_init__(self):
        if self.replications < 2:
            raise ConfigError("a scenario needs at least 2 replications")
        if not (0.0 < self.u0 < 1.0):
            raise ConfigError(f"u0 must be interior, got {self.u0}")
        if self.horizon_T <= 0:
            raise ConfigError("horizon_T must be positive")

    @property
    def delta(self) -> float:
        """The block-size scale delta = H / sqrt(T)."""
        return self.config.block_size / math.sqrt(self.horizon_T)

    def simulate(self, rep: int):
        return simulate_series(
            self.sigma2,
            self.intensity,
            self.horizon_T,
            replication_seed(self.master_seed, rep),
            noise=self.noise,
            rescaled=self.rescaled,
            x0=self.x0,
        )


@dataclass
class MCReport:
    """Aggregated replication statistics for one estimator tag."""

    scenario: str
    estimator_tag: str
    replications: int
    estimates: np.ndarray
    failures: list
    target_mean: float
    mean: float
    bias: float
    rate: float
    scaled_variance: float
    theoretical_variance: float | None
    variance_ratio: float | None
    skewness: float
    excess_kurtosis: float
    regime: str | None
    elapsed_s: float

    def to_dict(self, include_estimates: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "estimator": self.estimator_tag,
            "replications": self.replications,
            "failures": len(self.failures),
            "target_mean": self.target_mean,
            "mean": self.mean,
            "bias": self.bias,
            "rate": self.rate,
            "scaled_variance": self.scaled_variance,
            "theoretical_variance": self.theoretical_variance,
            "variance_ratio": self.variance_ratio,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "regime": self.regime,
            "timing": {"elapsed_s": self.elapsed_s},
        }
        if include_estimates:
            out["estimates"] = [None if math.isnan(v) else v for v in self.estimates]
        return out

    @property
    def mean_se(self) -> float:
        ok = self.estimates[~np.isnan(self.estimates)]
        return float(np.std(ok, ddof=1) / math.sqrt(ok.size))


def _smoothed_intensity_mean(s: Scenario) -> float:
    """E[intensity estimate] = int Kf(x) lambda(u0 + b x) dx (exact center)."""
    bw = s.config.intensity_bandwidth
    kern = s.config.intensity_kernel
    val, _ = integrate.quad(
        lambda x: float(kern(np.array([x]))[0]) * float(s.intensity.value(s.u0 + bw * x)),
        -1.0,
        1.0,
        limit=200,
    )
    return val


def _targets(s: Scenario, tag: str):
    """(target mean, theoretical variance or None, regime label or None)."""
    T = s.horizon_T
    # without the 1/sqrt(T) increment factor the volatility estimators chase
    # T times the curve; folding that into sigma^2 keeps every target exact
    vol_scale = 1.0 if s.rescaled else T
    sig2 = float(s.sigma2.value(s.u0)) * vol_scale
    lam = float(s.intensity.value(s.u0))
    w2 = s.noise.omega**2
    cfg = s.config
    delta = s.delta
    regime = None

    if tag == "intensity":
        return _smoothed_intensity_mean(s), asymptotics.intensity_variance_target(
            lam, cfg.intensity_kernel
        ), None

    if tag == "clock_pavg":
        smooth = bool(
            s.smoothness and s.smoothness.m == 2 and s.smoothness.m_prime == 2
        )
        curv = float(
            s.sigma2.deriv2(s.u0) * vol_scale * lam
            + 2.0 * s.sigma2.deriv1(s.u0) * vol_scale * s.intensity.deriv1(s.u0)
            + sig2 * s.intensity.deriv2(s.u0)
        )
        mean = sig2 * lam + asymptotics.clock_bias_target(
            curv, cfg.clock_bandwidth, cfg.clock_kernel, smooth=smooth
        )
        comps = asymptotics.clock_variance_target(
            sig2, lam, w2, delta, cfg.clock_kernel, cfg.weight
        )
        if s.overlap_adjusted:
            comps = asymptotics.apply_overlap(comps, asymptotics.overlap_factors(cfg.weight))
        return mean, comps.total, None

    if tag == "tick_pavg":
        comps = asymptotics.tick_variance_target(sig2, w2, delta, cfg.tick_kernel, cfg.weight)
        if s.overlap_adjusted:
            comps = asymptotics.apply_overlap(comps, asymptotics.overlap_factors(cfg.weight))
        return sig2, comps.total, None

    if tag == "decomposed":
        if s.smoothness is None:
            regime = "tick_rate"
            comps = asymptotics.tick_variance_target(
                sig2, w2, delta, cfg.tick_kernel, cfg.weight
            )
            if s.overlap_adjusted:
                comps = asymptotics.apply_overlap(
                    comps, asymptotics.overlap_factors(cfg.weight)
                )
            return sig2 * lam, lam**2 * comps.total, regime
        c1 = (cfg.intensity_bandwidth * T) / (cfg.tick_window / math.sqrt(T))
        regime, var = asymptotics.decomposed_variance_target(
            s.smoothness, sig2, lam, w2, delta,
            cfg.intensity_kernel, cfg.tick_kernel, cfg.weight, c1=c1,
        )
        if s.overlap_adjusted and regime == "tick_rate":
            comps = asymptotics.tick_variance_target(
                sig2, w2, delta, cfg.tick_kernel, cfg.weight
            )
            var = lam**2 * asymptotics.apply_overlap(
                comps, asymptotics.overlap_factors(cfg.weight)
            ).total
        return sig2 * lam, var, regime

    if tag == "noise_var":
        return asymptotics.noise_variance_mean_target(sig2, w2, T), None, None

    if tag == "realized_vol":
        return sig2 * lam + 2.0 * T * w2 * lam, None, None

    raise ConfigError(f"unknown estimator tag {tag!r}")


def _one_rep(args):
    s, tag, rep = args
    series = s.simulate(rep)
    try:
        return rep, float(_POINTWISE[tag](series, s.u0, s.config)), None
    except TickVolError as exc:
        return rep, math.nan, f"{type(exc).__name__}: {exc}"


def _map_reps(s: Scenario, tag: str):
    jobs = [(s, tag, r) for r in range(s.replications)]
    workers = int(os.environ.get("TICKVOL_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_rep, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        results = [_one_rep(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    return results


def run_scenario(s: Scenario, which: str) -> MCReport:
    """Run R replications, scale errors by the applicable CLT rate, and
    compare the empirical variance with the closed-form target.

    Failed replications are recorded (never retried — a retry would bias the
    sample); more than 5% failures aborts with diagnostics.
    """
    start = time.perf_counter()
    target_mean, theo_var, regime = _targets(s, which)
    results = _map_reps(s, which)

    estimates = np.array([v for _, v, _ in results])
    failures = [(rep, reason) for rep, _, reason in results if reason is not None]
    if len(failures) > 0.05 * s.replications:
        preview = "; ".join(f"rep {r}: {why}" for r, why in failures[:5])
        raise ScenarioFailureError(
            f"scenario {s.name!r}: {len(failures)}/{s.replications} replications "
            f"failed ({preview} ...)"
        )

    ok = estimates[~np.isnan(estimates)]
    rate = asymptotics.rate_for(which, s.horizon_T, s.config, regime=regime or "tick_rate")
    scaled = rate * (ok - target_mean)
    scaled_var = float(np.var(scaled, ddof=1))
    ratio = scaled_var / theo_var if theo_var else None
    return MCReport(
        scenario=s.name,
        estimator_tag=which,
        replications=s.replications,
        estimates=estimates,
        failures=failures,
        target_mean=float(target_mean),
        mean=float(np.mean(ok)),
        bias=float(np.mean(ok) - target_mean),
        rate=float(rate),
        scaled_variance=scaled_var,
        theoretical_variance=None if theo_var is None else float(theo_var),
        variance_ratio=None if ratio is None else float(ratio),
        skewness=float(stats.skew(scaled)),
        excess_kurtosis=float(stats.kurtosis(scaled)),
        regime=regime,
        elapsed_s=time.perf_counter() - start,
    )


@dataclass
class ComparisonReport:
    """Head-to-head squared errors: decomposed vs classical clock estimator."""

    scenario: str
    replications: int
    truth: float
    mse_clock: float
    mse_decomposed: float
    mse_ratio: float           # decomposed / clock
    win_fraction: float        # fraction of reps where decomposed is closer
    mean_clock: float
    mean_decomposed: float
    case_label: str | None
    case_verdict: str | None
    elapsed_s: float

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["timing"] = {"elapsed_s": out.pop("elapsed_s")}
        return out


def _one_comparison_rep(args):
    s, rep = args
    series = s.simulate(rep)
    try:
        clock = float(_POINTWISE["clock_pavg"](series, s.u0, s.config))
        dec = float(_POINTWISE["decomposed"](series, s.u0, s.config))
        return rep, clock, dec, None
    except TickVolError as exc:
        return rep, math.nan, math.nan, f"{type(exc).__name__}: {exc}"


def compare_estimators(s: Scenario) -> ComparisonReport:
    """Paired comparison of the decomposed and classical clock estimators at
    u0, on the same simulated paths."""
    start = time.perf_counter()
    truth = float(s.sigma2.value(s.u0)) * float(s.intensity.value(s.u0))
    jobs = [(s, r) for r in range(s.replications)]
    workers = int(os.environ.get("TICKVOL_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_comparison_rep, jobs,
                                    chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        results = [_one_comparison_rep(j) for j in jobs]
    results.sort(key=lambda t: t[0])

    failures = [(r, why) for r, _, _, why in results if why is not None]
    if len(failures) > 0.05 * s.replications:
        raise ScenarioFailureError(
            f"scenario {s.name!r}: {len(failures)}/{s.replications} replications failed"
        )
    clock = np.array([c for _, c, _, why in results if why is None])
    dec = np.array([d for _, _, d, why in results if why is None])
    err_c = (clock - truth) ** 2
    err_d = (dec - truth) ** 2
    case = s.smoothness and asymptotics.rate_comparison_case(s.smoothness)
    return ComparisonReport(
        scenario=s.name,
        replications=s.replications,
        truth=truth,
        mse_clock=float(np.mean(err_c)),
        mse_decomposed=float(np.mean(err_d)),
        mse_ratio=float(np.mean(err_d) / np.mean(err_c)),
        win_fraction=float(np.mean(err_d < err_c)),
        mean_clock=float(np.mean(clock)),
        mean_decomposed=float(np.mean(dec)),
        case_label=case[0] if case else None,
        case_verdict=case[1] if case else None,
        elapsed_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Scenario registry
# ---------------------------------------------------------------------------

def scenario_from_config(name: str, cfg: dict) -> tuple[Scenario, str, dict]:
    """Build (Scenario, estimator tag or 'compare', band check) from one
    registry entry."""
    try:
        horizon = float(cfg["horizon"])
        sigma2 = curve_from_config(cfg["sigma2"])
        intensity = curve_from_config(cfg["intensity"])
    except KeyError as exc:
        raise ConfigError(f"scenario {name!r} is missing {exc}") from None

    noise_cfg = cfg.get("noise", {})
    noise = NoiseModel(
        omega=float(noise_cfg.get("omega", 0.0)),
        theta=float(noise_cfg.get("theta", 2.0)),
        rounding=bool(noise_cfg.get("rounding", False)),
    )

    est_cfg = dict(cfg.get("config", {}))
    block = est_cfg.get("block_size", 15)
    if block == "sqrt_T":
        block = int(math.floor(math.sqrt(horizon)))
    kern = KernelSpec(est_cfg.get("kernel", "epanechnikov"))
    tick_window = est_cfg.get("tick_window", "a1")
    if tick_window in ("a1", None):
        n_expected = horizon * integrate.quad(
            lambda u: float(intensity.value(u)), 0.0, 1.0, limit=200
        )[0]
        tick_window = max(
            a1_tick_window(float(est_cfg.get("clock_bandwidth", 0.05)), int(n_expected)),
            int(block),
        )
    config = EstimatorConfig(
        intensity_bandwidth=float(est_cfg.get("intensity_bandwidth", 0.05)),
        clock_bandwidth=float(est_cfg.get("clock_bandwidth", 0.05)),
        tick_window=int(tick_window),
        block_size=int(block),
        intensity_kernel=kern,
        clock_kernel=kern,
        tick_kernel=kern,
        weight=PreAvgWeight(int(block)),
    )

    smooth_cfg = cfg.get("smoothness")
    smoothness = None
    if smooth_cfg:
        smoothness = SmoothnessScenario(
            m=int(smooth_cfg["m"]),
            gamma=float(smooth_cfg["gamma"]),
            m_prime=int(smooth_cfg["m_prime"]),
            gamma_prime=float(smooth_cfg["gamma_prime"]),
        )

    scenario = Scenario(
        name=name,
        sigma2=sigma2,
        intensity=intensity,
        noise=noise,
        horizon_T=horizon,
        config=config,
        u0=float(cfg.get("u0", 0.5)),
        replications=int(cfg["replications"]),
        master_seed=int(cfg["seed"]),
        smoothness=smoothness,
        rescaled=bool(cfg.get("rescaled", True)),
        x0=float(cfg.get("x0", 0.0)),
        overlap_adjusted=bool(cfg.get("overlap_adjusted", False)),
    )
    tag = cfg.get("estimator", "compare")
    check = dict(cfg.get("check", {}))
    return scenario, tag, check


def check_band(report, check: dict) -> tuple[bool, str]:
    """Evaluate a registry band check against a report.

    Kinds: ``variance_ratio`` ([lo, hi] on empirical/theoretical),
    ``mean_within`` (|bias| <= multiplier * SE), ``mean_rel_tol``
    (|bias| <= tol * |target|), ``compare`` (min win fraction and max MSE
    ratio).
    """
    kind = check.get("kind")
    if kind == "variance_ratio":
        lo, hi = float(check["lo"]), float(check["hi"])
        if report.variance_ratio is None:
            return False, "no theoretical variance for this estimator"
        ok = lo <= report.variance_ratio <= hi
        return ok, f"variance ratio {report.variance_ratio:.4f} vs band [{lo}, {hi}]"
    if kind == "mean_within":
        mult = float(check.get("se_multiplier", 3.0))
        se = report.mean_se
        ok = abs(report.bias) <= mult * se
        return ok, f"|bias| {abs(report.bias):.3e} vs {mult} x SE {se:.3e}"
    if kind == "mean_rel_tol":
        tol = float(check["tol"])
        ok = abs(report.bias) <= tol * abs(report.target_mean)
        return ok, f"|bias|/target {abs(report.bias) / abs(report.target_mean):.4f} vs tol {tol}"
    if kind == "compare":
        min_win = float(check.get("min_win_fraction", 0.0))
        max_ratio = float(check.get("max_mse_ratio", math.inf))
        ok = report.win_fraction >= min_win and report.mse_ratio <= max_ratio
        return ok, (
            f"win fraction {report.win_fraction:.3f} (>= {min_win}), "
            f"MSE ratio {report.mse_ratio:.3f} (<= {max_ratio})"
        )
    raise ConfigError(f"unknown check kind {kind!r}")

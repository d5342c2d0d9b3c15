"""Synthetic tick data from the time-changed price model.

The generating model: transaction arrivals follow a nonhomogeneous Poisson
process with intensity lambda(t/T); between consecutive arrivals the latent
log-price moves by sigma(t_i/T) * U_i / sqrt(T) (or without the 1/sqrt(T)
factor when ``rescaled`` is off) with U_i i.i.d. standard normal; the
observed price adds i.i.d. Gaussian noise and, optionally, cent rounding in
price space.

Everything is a pure function of (inputs, seed).  Sub-streams for arrivals,
increments and noise are derived from one master seed so that, e.g., turning
the noise on or off never perturbs the arrival times.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .curves import CurveSpec
from .errors import InvalidCurveError, RoundingDomainError
from .series import TickSeries
from .validation import check_non_negative, check_positive

STREAM_ARRIVALS = "arrivals"
STREAM_INCREMENTS = "increments"
STREAM_NOISE = "noise"


def substream(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    """A generator for one named sub-stream of the master seed.

    The tag is hashed (CRC-32) into the spawn key, so streams are stable
    across runs and machines; extra indices (e.g. a replication number)
    extend the key.
    """
    key = (zlib.crc32(tag.encode("utf-8")),) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))


@dataclass(frozen=True)
class NoiseModel:
    """Additive observation noise, optionally followed by cent rounding.

    ``omega`` is the noise standard deviation in log-price units; ``theta``
    records the fourth-moment ratio Var[eps^2] = theta * omega^4 (Gaussian
    noise has theta = 2, and only Gaussian draws are implemented).
    """

    omega: float = 0.0
    theta: float = 2.0
    rounding: bool = False

    def __post_init__(self):
        check_non_negative(self.omega, "omega")
        check_positive(self.theta, "theta")

    @property
    def is_identity(self) -> bool:
        return self.omega == 0.0 and not self.rounding

    def to_config(self) -> dict:
        return {"omega": self.omega, "theta": self.theta, "rounding": self.rounding}


def sample_nhpp(intensity: CurveSpec, horizon_T: float, rng: np.random.Generator) -> np.ndarray:
    """Arrival times in (0, T] by Lewis-Shedler thinning.

    Homogeneous candidates at the envelope rate lambda_max are generated from
    exponential gaps (in batches) and accepted with probability
    lambda(t/T) / lambda_max.
    """
    T = check_positive(horizon_T, "horizon_T")
    intensity.validate()
    lam_max = intensity.sup()
    if not math.isfinite(lam_max) or lam_max <= 0:
        raise InvalidCurveError(f"intensity envelope must be positive, got {lam_max!r}")

    candidates = []
    t = 0.0
    batch = max(64, int(1.1 * lam_max * T) + 32)
    while t <= T:
        gaps = rng.exponential(1.0 / lam_max, size=batch)
        times = t + np.cumsum(gaps)
        candidates.append(times)
        t = times[-1]
    cand = np.concatenate(candidates)
    cand = cand[cand <= T]

    lam_at = intensity.value(cand / T)
    if not np.all(np.isfinite(lam_at)) or np.any(lam_at <= 0):
        raise InvalidCurveError("intensity evaluated non-finite or non-positive")
    keep = rng.random(cand.size) * lam_max < lam_at
    return cand[keep]


def sample_tick_path(
    sigma2: CurveSpec,
    times: np.ndarray,
    horizon_T: float,
    rng: np.random.Generator,
    rescaled: bool = True,
    x0: float = 0.0,
) -> np.ndarray:
    """Latent log-prices at the given arrival times.

    X starts at ``x0`` and gains sigma(t_i/T) * U_i * T^{-1/2} per arrival
    (drop the T^{-1/2} with ``rescaled=False``).
    """
    T = check_positive(horizon_T, "horizon_T")
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.empty(0)
    sigma2.validate()
    sig = np.sqrt(sigma2.value(times / T))
    scale = 1.0 / math.sqrt(T) if rescaled else 1.0
    increments = sig * rng.standard_normal(times.size) * scale
    return x0 + np.cumsum(increments)


def apply_noise(latent: np.ndarray, model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Observed log-prices: latent + Gaussian noise, then optional rounding.

    Rounding floors the noisy price to whole cents:
    Y = log(floor(100 * (exp(X) + eps)) / 100).  Prices at or below one cent
    would floor to zero, so they raise instead of being clamped (a clamp
    would bias everything downstream invisibly).
    """
    x = np.asarray(latent, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("latent log-prices must be finite")
    if model.is_identity:
        return x.copy()
    if model.omega > 0 and model.theta != 2.0:
        raise ValueError(
            "only the Gaussian noise sampler is implemented (theta = 2); "
            f"got theta = {model.theta!r}"
        )
    eps = rng.normal(0.0, model.omega, size=x.size) if model.omega > 0 else np.zeros(x.size)
    if not model.rounding:
        return x + eps
    noisy_price = np.exp(x) + eps
    bad = np.flatnonzero(noisy_price <= 0.01)
    if bad.size:
        idx = int(bad[0])
        raise RoundingDomainError(
            f"price {noisy_price[idx]!r} at index {idx} would be non-positive "
            "after flooring to whole cents",
            index=idx,
        )
    return np.log(np.floor(100.0 * noisy_price) / 100.0)


def simulate_series(
    sigma2: CurveSpec,
    intensity: CurveSpec,
    horizon_T: float,
    seed: int,
    noise: NoiseModel | None = None,
    rescaled: bool = True,
    x0: float = 0.0,
    arrival_times: np.ndarray | None = None,
) -> TickSeries:
    """Full pipeline: arrivals -> latent path -> observed series.

    ``arrival_times`` overrides the NHPP sampler (e.g. arrival times taken
    from a cleaned real-data file); they must already be strictly increasing
    within (0, T].
    """
    if arrival_times is None:
        times = sample_nhpp(intensity, horizon_T, substream(seed, STREAM_ARRIVALS))
    else:
        times = np.asarray(arrival_times, dtype=float)
    latent = sample_tick_path(
        sigma2, times, horizon_T, substream(seed, STREAM_INCREMENTS), rescaled=rescaled, x0=x0
    )
    observed = apply_noise(latent, noise or NoiseModel(), substream(seed, STREAM_NOISE))
    return TickSeries(horizon_T=horizon_T, times=times, log_prices=observed)

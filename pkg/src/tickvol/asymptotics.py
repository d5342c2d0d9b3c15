"""Closed-form asymptotic targets for the spot estimators.

The central-limit targets below are stated for the block-sum form of the
pre-averaged statistics: with block size H = delta * sqrt(T),

* intensity:   sqrt(bT) (lam_hat - E lam_hat)      -> N(0, lam * int Kf^2)
* clock vol:   sqrt(b sqrt(T)) (est - s2*lam - BIAS) -> N(0, delta*eta_A + eta_B/delta + eta_C/delta^3)
* tick vol:    sqrt(N / sqrt(T)) (est - s2)          -> N(0, delta*xi_A + xi_B/delta + xi_C/delta^3)

with eta_A = 2 s2^2 lam int K^2, eta_B = 4 w2 s2 lam (g2'/g2) int K^2,
eta_C = 2 w2^2 lam (g2'/g2)^2 int K^2, and xi_* the same without lam.

The shipped estimators average *overlapping* pre-averaging windows (one per
tick), which is a shift-average of block sums and therefore has strictly
smaller asymptotic variance: each component shrinks by a weight-overlap
factor 2 * int_0^1 phi(u)^2 du / const^2 built from the lag-covariance
functionals phi_g(u) = int_u^1 g(x) g(x-u) dx and its g' analogue (for the
default weight g(x) = x(1-x): 835/1386, 17/63 and 12/35 for the A, B, C
components).  ``overlap_factors`` computes these; validation scenarios can
target either flavor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .errors import ConfigError
from .kernels import KernelSpec, PreAvgWeight

#: Threshold appearing in the decomposed-estimator regime dispatch for
#: twice-differentiable tick volatility with rough intensity.
SQRT65_THRESHOLD = (math.sqrt(65.0) - 7.0) / 4.0


class VarianceComponents(NamedTuple):
    """delta-weighted variance decomposition A + B + C and its pieces."""

    total: float
    comp_a: float   # delta * (signal part)
    comp_b: float   # (1/delta) * (signal x noise cross part)
    comp_c: float   # (1/delta^3) * (pure noise part)


class OverlapFactors(NamedTuple):
    """Multiplicative corrections from block sums to overlapping sums."""

    factor_a: float
    factor_b: float
    factor_c: float


def intensity_variance_target(lam: float, kernel: KernelSpec) -> float:
    """Asymptotic variance of sqrt(bT)(lam_hat - E lam_hat)."""
    return lam * kernel.int_sq


def clock_variance_target(
    sigma2: float,
    lam: float,
    omega2: float,
    delta: float,
    kernel: KernelSpec,
    weight: PreAvgWeight,
) -> VarianceComponents:
    """Variance target for the pre-averaged clock-time estimator.

    Components scale as: A quadratic in sigma^2 and linear in lambda, B
    bilinear in (sigma^2, omega^2, lambda), C quadratic in omega^2 and
    linear in lambda.
    """
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    ratio = weight.g2_prime / weight.g2
    k2 = kernel.int_sq
    eta_a = 2.0 * sigma2**2 * lam * k2
    eta_b = 4.0 * omega2 * sigma2 * lam * ratio * k2
    eta_c = 2.0 * omega2**2 * lam * ratio**2 * k2
    a, b, c = delta * eta_a, eta_b / delta, eta_c / delta**3
    return VarianceComponents(a + b + c, a, b, c)


def tick_variance_target(
    sigma2: float,
    omega2: float,
    delta: float,
    kernel: KernelSpec,
    weight: PreAvgWeight,
) -> VarianceComponents:
    """Variance target for the pre-averaged tick-time estimator (no lambda)."""
    return clock_variance_target(sigma2, 1.0, omega2, delta, kernel, weight)


def clock_bias_target(product_second_deriv: float, bandwidth: float, kernel: KernelSpec,
                      smooth: bool = True) -> float:
    """Smoothing bias (1/2) (s2*lam)'' b^2 int x^2 K(x) dx.

    ``smooth`` is the twice-differentiability indicator; the bias is zero
    when it is off.
    """
    if not smooth:
        return 0.0
    return 0.5 * product_second_deriv * bandwidth**2 * kernel.int_x2


def noise_variance_mean_target(sigma2: float, omega2: float, horizon_T: float) -> float:
    """Mean of the realized-vol / (2 T intensity) ratio: omega^2 + sigma^2/(2T)."""
    return omega2 + sigma2 / (2.0 * horizon_T)


def overlap_factors(weight: PreAvgWeight, n_quad: int = 4001) -> OverlapFactors:
    """Variance shrinkage of overlapping relative to block-sum statistics.

    factor_a = 2 int phi_g^2 / g2^2, factor_b = 2 int phi_g phi_g' / (g2 g2'),
    factor_c = 2 int phi_g'^2 / g2'^2, with phi_f(u) = int_u^1 f(x) f(x-u) dx.
    """
    xs = np.linspace(0.0, 1.0, n_quad)
    g = np.asarray(weight.g(xs), dtype=float)
    gp = np.asarray(weight.g_deriv(xs), dtype=float)

    def lag_functional(f):
        # phi(u_j) = int_{u_j}^1 f(x) f(x - u_j) dx on the restricted grid
        # (integrating from the lag point avoids a spurious half cell where
        # the integrand jumps from zero)
        vals = np.empty(xs.size)
        for j in range(xs.size):
            prod = f[j:] * f[: xs.size - j]
            vals[j] = np.trapezoid(prod, xs[j:]) if prod.size > 1 else 0.0
        return vals

    phi_g = lag_functional(g)
    phi_gp = lag_functional(gp)
    int_gg = np.trapezoid(phi_g * phi_g, xs)
    int_ggp = np.trapezoid(phi_g * phi_gp, xs)
    int_gpgp = np.trapezoid(phi_gp * phi_gp, xs)
    return OverlapFactors(
        factor_a=2.0 * int_gg / weight.g2**2,
        factor_b=2.0 * int_ggp / (weight.g2 * weight.g2_prime),
        factor_c=2.0 * int_gpgp / weight.g2_prime**2,
    )


def apply_overlap(components: VarianceComponents, factors: OverlapFactors) -> VarianceComponents:
    """Rescale each variance component by its overlap factor."""
    a = components.comp_a * factors.factor_a
    b = components.comp_b * factors.factor_b
    c = components.comp_c * factors.factor_c
    return VarianceComponents(a + b + c, a, b, c)


# ---------------------------------------------------------------------------
# Bandwidth guidance
# ---------------------------------------------------------------------------

def optimal_delta(comp_a: float, comp_b: float, comp_c: float, tol: float = 1e-10) -> float:
    """Minimizer of delta*A + B/delta + C/delta^3 over delta > 0.

    A must be positive; with B = C = 0 the objective is monotone increasing
    and the degenerate infimum ``0.0`` is returned as a sentinel.  Found by
    safeguarded Brent root finding on the derivative A - B/d^2 - 3C/d^4.
    """
    if comp_a <= 0:
        raise ConfigError(f"A component must be positive, got {comp_a}")
    if comp_b < 0 or comp_c < 0:
        raise ConfigError("B and C components must be non-negative")
    if comp_b == 0.0 and comp_c == 0.0:
        return 0.0

    def deriv(d):
        return comp_a - comp_b / d**2 - 3.0 * comp_c / d**4

    # the derivative is strictly increasing for delta > 0 with a unique zero
    # at delta^2 = (B + sqrt(B^2 + 12 A C)) / (2A); that magnitude seeds a
    # safeguarded bracket for the root finder
    x_star = (comp_b + math.sqrt(comp_b**2 + 12.0 * comp_a * comp_c)) / (2.0 * comp_a)
    guess = math.sqrt(x_star)
    lo, hi = 0.5 * guess, 2.0 * guess
    while deriv(lo) >= 0:
        lo *= 0.5
    while deriv(hi) <= 0:
        hi *= 2.0
    return float(optimize.brentq(deriv, lo, hi, xtol=tol * max(guess, 1e-6), rtol=1e-12))


# ---------------------------------------------------------------------------
# Decomposed-estimator regimes and rate comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothnessScenario:
    """Holder-class metadata (m, gamma) for the tick-volatility curve and
    (m', gamma') for the intensity curve.  Used only to label scenarios;
    nothing is ever inferred from data."""

    m: int
    gamma: float
    m_prime: int
    gamma_prime: float

    def __post_init__(self):
        if self.m not in (0, 1, 2) or self.m_prime not in (0, 1, 2):
            raise ConfigError("m and m_prime must be 0, 1 or 2")
        if not (0.0 < self.gamma < 1.0) or not (0.0 < self.gamma_prime < 1.0):
            raise ConfigError("gamma and gamma_prime must lie in (0, 1)")


def _regime_threshold(s: SmoothnessScenario) -> float | None:
    """The gamma' threshold separating the tick-rate and intensity-rate
    regimes, where one exists (m' = 0 cases)."""
    if s.m_prime != 0:
        return None
    if s.m == 0:
        return s.gamma / (2.0 * s.gamma + 2.0)
    if s.m == 1:
        gstar = min(s.gamma, s.gamma_prime)
        return (gstar + 2.0) / (2.0 * gstar + 8.0)
    return SQRT65_THRESHOLD


def decomposed_regime(s: SmoothnessScenario) -> str:
    """Which CLT applies to the decomposed estimator.

    Returns ``"tick_rate"`` (rate sqrt(N/sqrt(T)), variance lam^2 * tick
    components), ``"intensity_rate"`` (rate sqrt(bT), variance
    s2^2 lam int Kf^2), or ``"boundary"`` (both contribute, with the rate
    ratio constant c1).
    """
    th = _regime_threshold(s)
    if th is None:
        return "tick_rate"
    if s.gamma_prime > th:
        return "tick_rate"
    if s.gamma_prime < th:
        return "intensity_rate"
    return "boundary"


def decomposed_variance_target(
    s: SmoothnessScenario,
    sigma2: float,
    lam: float,
    omega2: float,
    delta: float,
    intensity_kernel: KernelSpec,
    tick_kernel: KernelSpec,
    weight: PreAvgWeight,
    c1: float | None = None,
) -> tuple[str, float]:
    """(regime, asymptotic variance) for the decomposition-based estimator.

    In the boundary regime ``c1`` is the limit of bT / (N / sqrt(T)) (b the
    intensity bandwidth) and must be supplied.
    """
    regime = decomposed_regime(s)
    tick = tick_variance_target(sigma2, omega2, delta, tick_kernel, weight)
    if regime == "tick_rate":
        return regime, lam**2 * tick.total
    w2_intensity = sigma2**2 * lam * intensity_kernel.int_sq
    if regime == "intensity_rate":
        return regime, w2_intensity
    if c1 is None:
        raise ConfigError("boundary regime requires the rate-ratio constant c1")
    return regime, w2_intensity + c1 * lam**2 * tick.total


def rate_comparison_case(s: SmoothnessScenario) -> tuple[str, str]:
    """Label (case id, verdict) comparing the decomposed estimator's rate
    against the classical clock-time estimator's.

    Verdicts: ``faster`` (decomposed wins), ``same`` (equal rates; the
    decomposed variance is smaller exactly when lambda < 1), ``unknown``
    (no comparison available).
    """
    m, g, mp, gp = s.m, s.gamma, s.m_prime, s.gamma_prime
    if m == 0 and mp == 0:
        return ("c1", "faster") if g > gp else ("c6", "same")
    if m == 1 and mp == 0:
        return ("c2", "faster")
    if m == 1 and mp == 1:
        return ("c3", "faster") if 2.0 * gp < g else ("c9", "unknown")
    if m == 2 and mp == 0:
        return ("c4", "faster")
    if m == 2 and mp == 1:
        return ("c5", "faster") if gp < 0.5 else ("c11", "unknown")
    if m == 0 and mp == 1:
        return ("c7", "same")
    if m == 0 and mp == 2:
        return ("c8", "same")
    if m == 1 and mp == 2:
        return ("c10", "unknown")
    return ("c12", "unknown")


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def rate_for(tag: str, horizon_T: float, cfg, regime: str = "tick_rate") -> float:
    """The CLT scaling sqrt(rate) for a given estimator tag.

    intensity: sqrt(bT); clock_pavg: sqrt(b*sqrt(T)); tick_pavg: sqrt(N/sqrt(T));
    decomposed: per regime.  Other tags have no CLT here and get 1.0.
    """
    if tag == "intensity":
        return math.sqrt(cfg.intensity_bandwidth * horizon_T)
    if tag == "clock_pavg":
        return math.sqrt(cfg.clock_bandwidth * math.sqrt(horizon_T))
    if tag == "tick_pavg":
        return math.sqrt(cfg.tick_window / math.sqrt(horizon_T))
    if tag == "decomposed":
        if regime == "intensity_rate":
            return math.sqrt(cfg.intensity_bandwidth * horizon_T)
        return math.sqrt(cfg.tick_window / math.sqrt(horizon_T))
    return 1.0

"""Smoothing kernels and pre-averaging weight functions.

All three estimator kernels share the same contract: continuous, symmetric,
supported on (-1, 1), unit mass.  The pre-averaging weight ``g`` lives on
[0, 1] with g(0) = g(1) = 0; its derived constants (discrete and limiting)
are computed once per configuration because the H*N inner loops downstream
dominate the runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from .errors import InvalidWeightError, WindowError
from .validation import check_int_at_least


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

_KERNELS = {
    "epanechnikov": {
        "func": lambda x: 0.75 * (1.0 - x * x),
        "int_sq": 3.0 / 5.0,   # integral of K^2 over [-1, 1]
        "int_x2": 1.0 / 5.0,   # integral of x^2 K(x)
    },
    "triangular": {
        "func": lambda x: 1.0 - np.abs(x),
        "int_sq": 2.0 / 3.0,
        "int_x2": 1.0 / 6.0,
    },
    "uniform": {
        "func": lambda x: np.full_like(x, 0.5),
        "int_sq": 1.0 / 2.0,
        "int_x2": 1.0 / 3.0,
    },
}


@dataclass(frozen=True)
class KernelSpec:
    """A named smoothing kernel, evaluable at any real x (0 outside (-1, 1))."""

    kind: str = "epanechnikov"

    def __post_init__(self):
        if self.kind not in _KERNELS:
            raise ValueError(
                f"unknown kernel kind {self.kind!r}; choose from {sorted(_KERNELS)}"
            )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < 1.0
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = _KERNELS[self.kind]["func"](x[inside])
        return out

    @property
    def int_sq(self) -> float:
        """Closed-form integral of K^2 (Epanechnikov: 3/5)."""
        return _KERNELS[self.kind]["int_sq"]

    @property
    def int_x2(self) -> float:
        """Closed-form integral of x^2 K(x) (Epanechnikov: 1/5)."""
        return _KERNELS[self.kind]["int_x2"]


def eval_kernel(spec: KernelSpec, x) -> float | np.ndarray:
    """Evaluate a kernel; returns exactly 0 outside (-1, 1)."""
    out = spec(np.asarray(x, dtype=float))
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# Pre-averaging weights
# ---------------------------------------------------------------------------

def parabolic_weight(x):
    """The default pre-averaging weight g(x) = x(1 - x)."""
    x = np.asarray(x, dtype=float)
    return x * (1.0 - x)


def _parabolic_deriv(x):
    return 1.0 - 2.0 * np.asarray(x, dtype=float)


class WeightConstants(NamedTuple):
    g2: float           # integral of g^2
    g2_prime: float     # integral of (g')^2
    g2_discrete: float  # sum_{l=1..H-1} g(l/H)^2 / H
    sum_h2: float       # sum_{l=1..H-1} h(l/H)^2


@dataclass(frozen=True, eq=False)
class PreAvgWeight:
    """Weight function g with block size H and all derived constants.

    ``h(l/H) := g((l+1)/H) - g(l/H)`` is tabulated for l = 0..H-1; the
    bias-correction constant ``sum_h2`` deliberately sums l = 1..H-1 only,
    matching the estimator definitions, while the full table (including the
    l = 0 term, equal to g(1/H)) is what makes the two algebraically
    equivalent forms of the pre-averaged increment agree exactly.
    """

    H: int
    g: Callable = parabolic_weight
    g_deriv: Callable | None = None

    g_values: np.ndarray = field(init=False, repr=False)   # g(l/H), l=1..H-1
    h_values: np.ndarray = field(init=False, repr=False)   # h(l/H), l=0..H-1
    g2: float = field(init=False)
    g2_prime: float = field(init=False)
    g2_discrete: float = field(init=False)
    sum_h2: float = field(init=False)

    def __post_init__(self):
        H = check_int_at_least(self.H, 2, "block size H")
        object.__setattr__(self, "H", H)

        g0 = float(self.g(0.0))
        g1 = float(self.g(1.0))
        if abs(g0) > 1e-12 or abs(g1) > 1e-12:
            raise InvalidWeightError(
                f"weight must satisfy g(0) = g(1) = 0, got g(0)={g0!r}, g(1)={g1!r}"
            )

        nodes = np.arange(0, H + 1) / H
        g_all = np.asarray(self.g(nodes), dtype=float)
        g_vals = g_all[1:H]
        h_vals = np.diff(g_all)  # h(l/H) for l = 0..H-1
        object.__setattr__(self, "g_values", g_vals)
        object.__setattr__(self, "h_values", h_vals)
        object.__setattr__(self, "g2_discrete", float(np.sum(g_vals**2) / H))
        object.__setattr__(self, "sum_h2", float(np.sum(h_vals[1:] ** 2)))

        if self.g is parabolic_weight:
            g2, g2p = 1.0 / 30.0, 1.0 / 3.0
            object.__setattr__(self, "g_deriv", _parabolic_deriv)
        else:
            g2 = integrate.quad(lambda x: float(self.g(x)) ** 2, 0.0, 1.0)[0]
            deriv = self.g_deriv
            if deriv is None:
                eps = 1e-6

                def deriv(x, _g=self.g, _e=eps):
                    x = np.clip(np.asarray(x, dtype=float), _e, 1.0 - _e)
                    return (np.asarray(_g(x + _e)) - np.asarray(_g(x - _e))) / (2 * _e)

                object.__setattr__(self, "g_deriv", deriv)
            g2p = integrate.quad(lambda x: float(deriv(x)) ** 2, 0.0, 1.0)[0]
        object.__setattr__(self, "g2", float(g2))
        object.__setattr__(self, "g2_prime", float(g2p))

    def constants(self) -> WeightConstants:
        return WeightConstants(self.g2, self.g2_prime, self.g2_discrete, self.sum_h2)


def weight_constants(weight: PreAvgWeight) -> WeightConstants:
    """Analytic limits and discrete sums for a configured weight."""
    return weight.constants()


# ---------------------------------------------------------------------------
# Pre-averaged increments
# ---------------------------------------------------------------------------

def pre_averaged_increments(log_prices: np.ndarray, weight: PreAvgWeight) -> np.ndarray:
    """All pre-averaged increments of a series, one per admissible start tick.

    Entry ``i`` is sum_{l=1..H-1} g(l/H) (Y[i+l] - Y[i+l-1]); the window must
    fit, so the result has length ``len(log_prices) - H + 1`` (empty when the
    series is shorter than H).
    """
    y = np.asarray(log_prices, dtype=float)
    H = weight.H
    if y.size < H:
        return np.empty(0)
    dy = np.diff(y)
    # correlate(dy, w)[i] = sum_l dy[i + l] w[l] with w[l] = g((l+1)/H)
    return np.correlate(dy, weight.g_values, mode="valid")


def pre_averaged_increment(log_prices: np.ndarray, i: int, weight: PreAvgWeight) -> float:
    """The pre-averaged increment starting at tick ``i`` (0-based).

    Raises :class:`WindowError` when the H-tick window runs past the series
    end; windows are never silently truncated.
    """
    y = np.asarray(log_prices, dtype=float)
    H = weight.H
    if i < 0 or i + H - 1 > y.size - 1:
        raise WindowError(
            f"pre-averaging window [{i}, {i + H - 1}] exceeds series of length {y.size}",
            deficit_right=max(0, i + H - 1 - (y.size - 1)),
        )
    return float(np.dot(weight.g_values, np.diff(y[i : i + H])))


def pre_averaged_increment_hform(
    log_prices: np.ndarray, i: int, weight: PreAvgWeight
) -> float:
    """Cross-check form: -sum_{l=0..H-1} h(l/H) Y[i+l].

    Algebraically identical to :func:`pre_averaged_increment` (Abel
    summation); the l = 0 term carries h(0) = g(1/H).
    """
    y = np.asarray(log_prices, dtype=float)
    H = weight.H
    if i < 0 or i + H - 1 > y.size - 1:
        raise WindowError(
            f"pre-averaging window [{i}, {i + H - 1}] exceeds series of length {y.size}",
            deficit_right=max(0, i + H - 1 - (y.size - 1)),
        )
    return float(-np.dot(weight.h_values, y[i : i + H]))

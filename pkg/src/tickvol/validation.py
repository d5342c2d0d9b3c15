"""Small input-validation helpers shared by the estimator API and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def as_float_array(x, name: str) -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite values")
    return arr


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_non_negative(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ConfigError(f"{name} must be non-negative and finite, got {value!r}")
    return value


def check_fraction(value, name: str, upper: float = 0.5) -> float:
    """Bandwidth fractions live in (0, upper]."""
    value = float(value)
    if not (0.0 < value <= upper):
        raise ConfigError(f"{name} must lie in (0, {upper}], got {value!r}")
    return value


def check_int_at_least(value, minimum: int, name: str) -> int:
    ivalue = int(value)
    if ivalue != value or ivalue < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return ivalue


def check_strictly_increasing(arr: np.ndarray, name: str) -> None:
    if arr.size >= 2 and not np.all(np.diff(arr) > 0):
        raise ConfigError(f"{name} must be strictly increasing")

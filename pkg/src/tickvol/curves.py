"""Deterministic positive parameter curves on rescaled time u in [0, 1].

These curves play two roles: the tick-time variance curve sigma^2(.) and the
trading intensity lambda(.).  Both must be finite and strictly positive on
the whole unit interval, and every preset knows its own supremum (needed by
the thinning sampler) and derivatives (needed by the bias targets).

Supported kinds
---------------
``constant``    c
``cosine_log``  exp(a + cos(k * pi * u))
``table``       linear interpolation of positive values on a u-grid
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidCurveError
from .validation import as_float_array, check_strictly_increasing


class CurveSpec:
    """Base class: a positive deterministic curve on u in [0, 1]."""

    kind: str = "abstract"

    def value(self, u):
        raise NotImplementedError

    def deriv1(self, u):
        raise NotImplementedError

    def deriv2(self, u):
        raise NotImplementedError

    def sup(self) -> float:
        """An upper bound for the curve over [0, 1] (tight for presets)."""
        raise NotImplementedError

    def __call__(self, u):
        return self.value(u)

    def validate(self, n_probe: int = 257) -> None:
        """Check finiteness and strict positivity on a probe grid."""
        probe = self.value(np.linspace(0.0, 1.0, n_probe))
        if not np.all(np.isfinite(probe)):
            raise InvalidCurveError(f"{self.kind} curve evaluates to non-finite values")
        if np.any(probe <= 0.0):
            raise InvalidCurveError(
                f"{self.kind} curve is not strictly positive on [0, 1]"
            )

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantCurve(CurveSpec):
    c: float

    kind = "constant"

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidCurveError(f"constant curve requires c > 0, got {self.c!r}")

    def value(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.c)

    def deriv1(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    deriv2 = deriv1

    def sup(self) -> float:
        return self.c

    def to_config(self) -> dict:
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class CosineLogCurve(CurveSpec):
    """exp(a + cos(k * pi * u)); always positive, supremum exp(a + 1)."""

    a: float
    k: float

    kind = "cosine_log"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.k)):
            raise InvalidCurveError("cosine_log curve requires finite a, k")

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(self.a + np.cos(self.k * np.pi * u))

    def deriv1(self, u):
        u = np.asarray(u, dtype=float)
        w = self.k * np.pi
        return -w * np.sin(w * u) * self.value(u)

    def deriv2(self, u):
        u = np.asarray(u, dtype=float)
        w = self.k * np.pi
        return (w * w) * (np.sin(w * u) ** 2 - np.cos(w * u)) * self.value(u)

    def sup(self) -> float:
        return math.exp(self.a + 1.0)

    def to_config(self) -> dict:
        return {"kind": "cosine_log", "a": self.a, "k": self.k}


@dataclass(frozen=True, eq=False)
class TableCurve(CurveSpec):
    """Linear interpolation of sampled values on a strictly increasing u-grid.

    Derivatives use central finite differences at the grid density and are
    approximate by construction.
    """

    grid: np.ndarray
    values: np.ndarray
    _step: float = field(init=False, repr=False, compare=False)

    kind = "table"

    def __post_init__(self):
        grid = as_float_array(self.grid, "table grid")
        values = as_float_array(self.values, "table values")
        if grid.size < 2:
            raise InvalidCurveError("table curve needs at least 2 grid points")
        if grid.size != values.size:
            raise InvalidCurveError("table grid and values must have equal length")
        check_strictly_increasing(grid, "table grid")
        if grid[0] > 0.0 or grid[-1] < 1.0:
            raise InvalidCurveError("table grid must cover [0, 1]")
        if np.any(values <= 0.0):
            raise InvalidCurveError("table values must be strictly positive")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_step", float(np.min(np.diff(grid))))

    def value(self, u):
        return np.interp(np.asarray(u, dtype=float), self.grid, self.values)

    def deriv1(self, u):
        h = self._step
        u = np.asarray(u, dtype=float)
        return (self.value(u + h) - self.value(u - h)) / (2.0 * h)

    def deriv2(self, u):
        h = self._step
        u = np.asarray(u, dtype=float)
        return (self.value(u + h) - 2.0 * self.value(u) + self.value(u - h)) / (h * h)

    def sup(self) -> float:
        # Interpolated values never exceed the node maximum; the 1.001 margin
        # keeps the thinning envelope strictly above the curve.
        return float(np.max(self.values)) * 1.001

    def to_config(self) -> dict:
        return {
            "kind": "table",
            "grid": [float(x) for x in self.grid],
            "values": [float(x) for x in self.values],
        }


def curve_from_config(cfg: dict) -> CurveSpec:
    """Build a curve from its config-file mapping (``kind`` plus parameters)."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"curve config must be a mapping with a 'kind' key, got {cfg!r}")
    kind = cfg["kind"]
    params = {k: v for k, v in cfg.items() if k != "kind"}
    try:
        if kind == "constant":
            return ConstantCurve(c=float(params.pop("c")))
        if kind == "cosine_log":
            return CosineLogCurve(a=float(params.pop("a")), k=float(params.pop("k")))
        if kind == "table":
            return TableCurve(grid=params.pop("grid"), values=params.pop("values"))
    except KeyError as exc:
        raise ConfigError(f"curve config for kind={kind!r} is missing {exc}") from None
    raise ConfigError(f"unknown curve kind {kind!r}")

"""Frequency grids and sampled frequency responses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

MIN_POINTS_PER_DECADE = 20


class GridMismatchError(ValueError):
    """Raised when combining responses sampled on different grids."""


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, positive, finite angular frequencies (rad/s)."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.omegas, dtype=np.float64)).copy()
        if w.ndim != 1 or w.size == 0:
            raise ValueError("frequency grid must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(w)):
            raise ValueError("frequency grid entries must be finite")
        if np.any(w <= 0.0):
            raise ValueError("frequency grid entries must be > 0")
        if np.any(np.diff(w) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)

    @classmethod
    def logspace(cls, w_min: float, w_max: float, points_per_decade: float) -> "FrequencyGrid":
        if not (0.0 < w_min < w_max):
            raise ValueError("need 0 < w_min < w_max")
        decades = np.log10(w_max / w_min)
        n = max(2, int(round(decades * points_per_decade)) + 1)
        return cls(np.logspace(np.log10(w_min), np.log10(w_max), n))

    @classmethod
    def default(cls) -> "FrequencyGrid":
        """400 log-spaced points over 0.1 to 1e4 rad/s."""
        return cls(np.logspace(-1.0, 4.0, 400))

    def __len__(self):
        return self.omegas.size

    def __eq__(self, other):
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return self.omegas.size == other.omegas.size and bool(np.all(self.omegas == other.omegas))

    def __hash__(self):
        return hash(self.omegas.tobytes())

    @property
    def decades(self) -> float:
        return float(np.log10(self.omegas[-1] / self.omegas[0]))

    def min_points_per_decade(self) -> float:
        """Density of the sparsest interval, in points per decade."""
        if self.omegas.size < 2:
            return 0.0
        steps = np.diff(np.log10(self.omegas))
        return float(1.0 / steps.max())


Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """Complex response values, one per grid point.

    ``evaluator`` optionally maps an array of omegas to exact response values
    of the underlying system; margin refinement uses it when present.
    """

    grid: FrequencyGrid
    values: np.ndarray
    evaluator: Optional[Evaluator] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=np.complex128)).copy()
        if v.shape != (len(self.grid),):
            raise ValueError(
                f"response has {v.size} values for a grid of {len(self.grid)} points"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func: Evaluator, grid: FrequencyGrid) -> "FrequencyResponse":
        return cls(grid, func(grid.omegas), func)

    @property
    def omegas(self) -> np.ndarray:
        return self.grid.omegas

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def magnitude_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.values))

    def phase_deg(self, unwrap: bool = True) -> np.ndarray:
        ph = np.angle(self.values)
        if unwrap:
            ph = np.unwrap(ph)
        return np.degrees(ph)

    def _check(self, other: "FrequencyResponse"):
        if self.grid != other.grid:
            raise GridMismatchError("frequency responses live on different grids")

    def _combine(self, other, op):
        if isinstance(other, FrequencyResponse):
            self._check(other)
            ev = None
            if self.evaluator is not None and other.evaluator is not None:
                f, g = self.evaluator, other.evaluator
                ev = lambda w: op(f(w), g(w))  # noqa: E731
            return FrequencyResponse(self.grid, op(self.values, other.values), ev)
        if np.isscalar(other):
            ev = None
            if self.evaluator is not None:
                f = self.evaluator
                ev = lambda w: op(f(w), other)  # noqa: E731
            return FrequencyResponse(self.grid, op(self.values, other), ev)
        return NotImplemented

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return self * -1.0


def sample(system, grid: FrequencyGrid) -> FrequencyResponse:
    """Sample a transfer function (anything with ``evaluate``) or pass a response through."""
    if isinstance(system, FrequencyResponse):
        if system.grid != grid:
            if system.evaluator is None:
                raise GridMismatchError("response has no evaluator to resample with")
            return FrequencyResponse.from_function(system.evaluator, grid)
        return system
    return FrequencyResponse.from_function(system.evaluate, grid)


def evaluator_of(system) -> Evaluator:
    """Exact per-frequency evaluator of a transfer function or response."""
    if isinstance(system, FrequencyResponse):
        if system.evaluator is None:
            raise ValueError("frequency response has no attached evaluator")
        return system.evaluator
    return system.evaluate

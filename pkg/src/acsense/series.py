"""Time grids and labelled time series."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigurationError

SUBSTEPS_PER_PERIOD = 40


@dataclass(frozen=True)
class TimeGrid:
    """Sample times ``linspace(t0, t1, n_samples)`` plus an integrator substep ``h``.

    ``h`` is an upper bound: each sample interval is split into the smallest
    number of equal substeps not exceeding ``h``.
    """

    t0: float
    t1: float
    n_samples: int
    h: float

    def __post_init__(self):
        if not (self.t1 > self.t0 >= 0):
            raise ConfigurationError(f"need t1 > t0 >= 0, got t0={self.t0}, t1={self.t1}")
        if self.n_samples < 2:
            raise ConfigurationError("n_samples must be at least 2")
        if not self.h > 0:
            raise ConfigurationError("substep h must be positive")

    @classmethod
    def for_field(cls, t0: float, t1: float, n_samples: int, omega: float,
                  substeps: int = SUBSTEPS_PER_PERIOD) -> "TimeGrid":
        return cls(t0, t1, n_samples, (2 * math.pi / omega) / substeps)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_samples)

    def resolves_field(self, omega: float) -> bool:
        return self.h <= (2 * math.pi / omega) / SUBSTEPS_PER_PERIOD * (1 + 1e-12)

    def substeps(self, breakpoints=()) -> np.ndarray:
        """Substep boundaries covering [t0, t1].

        Sample times and any extra ``breakpoints`` inside the grid are always
        boundaries, so events can be applied exactly between substeps.
        """
        knots = np.union1d(self.times, np.asarray(breakpoints, dtype=float))
        pieces = [knots[:1]]
        for a, b in zip(knots[:-1], knots[1:]):
            if b - a <= 1e-12 * max(1.0, abs(b)):
                continue
            m = max(1, math.ceil((b - a) / self.h - 1e-9))
            pieces.append(np.linspace(a, b, m + 1)[1:])
        return np.concatenate(pieces)


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = ""
    params: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.shape[0] != self.values.shape[0]:
            raise ValueError("times and values must have equal length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return self.times.shape[0]

"""Uniformly sampled time series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

UNITS = ("ampere", "tesla")


@dataclass
class TimeTrace:
    samples: np.ndarray
    fs: float
    units: str = "tesla"
    start_time: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise InvalidArgumentError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgumentError("samples must be finite")
        if not (np.isfinite(self.fs) and self.fs > 0):
            raise InvalidArgumentError(f"sampling frequency must be positive, got {self.fs}")
        if self.units not in UNITS:
            raise InvalidArgumentError(f"units must be one of {UNITS}, got {self.units!r}")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) / self.fs

    def replace(self, samples) -> "TimeTrace":
        return TimeTrace(samples, self.fs, self.units, self.start_time)

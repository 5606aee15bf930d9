"""Sensitivity and overlapping Allan deviation of magnetometer traces."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dsp_spectral import FilterChain
from .errors import AnalysisWarning, InvalidArgumentError
from .timetrace import TimeTrace


@dataclass(frozen=True)
class SensitivityReport:
    eta: float  # T/sqrt(Hz)
    trace_std: float  # T
    f_nep: float  # Hz
    band: tuple[float, float] | None = None


def sensitivity(trace: TimeTrace, f_nep: float, band: tuple[float, float] | None = None) -> SensitivityReport:
    """``eta = std / sqrt(2 f_nep)`` for a trace already band-limited to ``f_nep``."""
    if not f_nep > 0:
        raise InvalidArgumentError("f_nep must be positive")
    std = float(np.std(trace.samples, ddof=1)) if len(trace) > 1 else 0.0
    return SensitivityReport(std / math.sqrt(2.0 * f_nep), std, float(f_nep), band)


def min_detectable_field(eta: float, averaging_time: float) -> float:
    if not averaging_time > 0:
        raise InvalidArgumentError("averaging time must be positive")
    return eta / math.sqrt(averaging_time)


@dataclass(frozen=True)
class AdevPoint:
    tau: float
    adev: float
    std_error: float
    n_pairs: int


def default_taus(n_samples: int, fs: float, per_decade: int = 10) -> np.ndarray:
    """Averaging times from ``1/fs`` to ``n/(2 fs)``, log-spaced and anchored on whole decades of seconds.

    Each value is rounded to the nearest whole number of samples.
    """
    m_max = n_samples // 2
    if m_max < 1:
        return np.array([])
    lo = math.floor(math.log10(1.0 / fs) * per_decade)
    hi = math.ceil(math.log10(m_max / fs) * per_decade)
    m = np.round(10.0 ** (np.arange(lo, hi + 1) / per_decade) * fs).astype(np.int64)
    m = np.unique(np.clip(m, 1, m_max))
    return m / fs


def _averaging_factor(tau: float, fs: float) -> int:
    m_real = tau * fs
    m = int(round(m_real))
    if m < 1 or abs(m - m_real) > 1e-6 * max(1.0, m_real):
        raise InvalidArgumentError(f"tau={tau} s is not a positive multiple of 1/fs={1 / fs} s")
    return m


def overlapping_adev(
    trace: TimeTrace,
    taus=None,
    prefilter_notch_hz: float | None = None,
    notch_q: float = 1.0,
) -> list[AdevPoint]:
    """Overlapping Allan deviation of the trace values.

    For averaging factor ``m`` (``tau = m / fs``) with ``ybar_k`` the mean of
    samples ``k .. k+m-1``::

        sigma^2 = sum_{k=0}^{N-2m} (ybar_{k+m} - ybar_k)^2 / (2 (N - 2m + 1))

    Error bars use the non-overlapped pair count ``N // (2m)``. Averaging
    times needing ``2m > N`` are skipped with an :class:`AnalysisWarning`.
    ``prefilter_notch_hz`` removes a slow periodic component with a
    zero-phase notch first.
    """
    y = trace.samples
    if prefilter_notch_hz is not None:
        y = FilterChain(((prefilter_notch_hz, notch_q),)).apply(y, trace.fs)
    y = y - y.mean()
    n = y.size
    if taus is None:
        taus = default_taus(n, trace.fs)
    points = []
    skipped = []
    for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
        m = _averaging_factor(tau, trace.fs)
        if 2 * m > n:
            skipped.append(float(tau))
            continue
        var = kernels.allan_sum(y, m) / (2.0 * m * m * (n - 2 * m + 1))
        adev = math.sqrt(max(var, 0.0))
        pairs = n // (2 * m)
        points.append(AdevPoint(m / trace.fs, adev, adev / math.sqrt(pairs), pairs))
    if skipped:
        warnings.warn(f"averaging times {skipped} exceed half the trace; skipped", AnalysisWarning, stacklevel=2)
    return points


def loglog_slope(points: list[AdevPoint], tau_min: float = 0.0, tau_max: float = math.inf) -> float:
    """Least-squares slope of log(adev) against log(tau) within the given range."""
    sel = [(p.tau, p.adev) for p in points if tau_min <= p.tau <= tau_max and p.adev > 0]
    if len(sel) < 2:
        raise InvalidArgumentError("need at least two points to fit a slope")
    t, a = np.log10(np.array(sel)).T
    return float(np.polyfit(t, a, 1)[0])

"""Line-shape models for lock-in CW-ODMR spectra of a [111] NV ensemble.

A lock-in detected, frequency-modulated Lorentzian resonance is modeled as the
derivative of the Lorentzian ``L(d) = A h^2 / ((d - c)^2 + h^2)`` with
``h = fwhm / 2``. Three-tone hyperfine driving produces five such features on
a grid spaced by the hyperfine splitting.

The amplitude ``A`` carries the frequency scale of the modulation, so the
derivative model evaluates directly to demodulated photocurrent in amperes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, SingularParameterError

GAMMA_E = 2.80e10  # Hz/T
HYPERFINE_SPLITTING = 2.16e6  # Hz, 14N
N_PEAKS = 5

# Relative amplitudes of the five features when the three hyperfine lines are
# driven by three tones: the outer features overlap one tone, the next two,
# the central one all three. Normalised to the central feature.
THREE_TONE_RELATIVE_AMPLITUDES = (0.4, 0.8, 1.0, 0.8, 0.4)


def _check_finite(**values):
    for name, v in values.items():
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class DerivLorentzianPeak:
    amplitude: float
    fwhm: float
    center: float = 0.0

    def __post_init__(self):
        _check_finite(amplitude=self.amplitude, fwhm=self.fwhm, center=self.center)
        if self.fwhm <= 0:
            raise InvalidArgumentError(f"fwhm must be positive, got {self.fwhm}")


@dataclass
class OdmrSpectrum:
    detunings: np.ndarray
    demod_current: np.ndarray
    peaks: tuple[DerivLorentzianPeak, ...] | None = None

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.demod_current = np.asarray(self.demod_current, dtype=float)
        if self.detunings.ndim != 1 or self.detunings.shape != self.demod_current.shape:
            raise InvalidArgumentError("detunings and demod_current must be 1-D of equal length")
        if self.detunings.size and np.any(np.diff(self.detunings) <= 0):
            raise InvalidArgumentError("detunings must be strictly increasing")
        _check_finite(detunings=self.detunings, demod_current=self.demod_current)
        if self.peaks is not None:
            self.peaks = tuple(self.peaks)


@dataclass(frozen=True)
class SensorConfig:
    """Operating point of the magnetometer. SI units throughout."""

    fl_photocurrent: float = 6.4e-3
    zero_crossing_slope: float = 332e-12
    gyromagnetic_ratio: float = GAMMA_E
    hyperfine_splitting: float = HYPERFINE_SPLITTING
    mod_frequency: float = 6.2e3
    mod_depth: float = 1.6e5
    contrast: float = 0.03
    three_tone_gain: float = 2.5
    bias_field: float = 0.9e-3
    lockin_f3db: float = 149.4
    lockin_nep_bw: float = 168.8
    sampling_frequency: float = 400.0

    def __post_init__(self):
        nonneg = (
            "fl_photocurrent", "hyperfine_splitting", "mod_frequency", "mod_depth",
            "lockin_f3db", "lockin_nep_bw", "sampling_frequency",
        )
        for name in nonneg:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvalidArgumentError(f"{name} must be finite and nonnegative, got {v}")
        if not self.gyromagnetic_ratio > 0:
            raise InvalidArgumentError("gyromagnetic_ratio must be positive")
        if not 0 < self.contrast < 1:
            raise InvalidArgumentError("contrast must lie in (0, 1)")
        _check_finite(zero_crossing_slope=self.zero_crossing_slope, bias_field=self.bias_field)

    @property
    def response(self) -> float:
        """Photocurrent response to magnetic field, A/T."""
        return field_response(self.zero_crossing_slope, self.gyromagnetic_ratio)


def lorentzian(delta, peak: DerivLorentzianPeak):
    """Underlying (non-derivative) Lorentzian of ``peak``."""
    h = 0.5 * peak.fwhm
    x = np.asarray(delta, dtype=float) - peak.center
    return peak.amplitude * h * h / (x * x + h * h)


def deriv_lorentzian(delta, peak: DerivLorentzianPeak):
    """Derivative Lorentzian ``-2 A h^2 x / (x^2 + h^2)^2`` with ``x = delta - center``."""
    _check_finite(delta=delta)
    h = 0.5 * peak.fwhm
    x = np.asarray(delta, dtype=float) - peak.center
    q = x * x + h * h
    return -2.0 * peak.amplitude * h * h * x / (q * q)


def deriv_lorentzian_slope(delta, peak: DerivLorentzianPeak):
    """d/d(delta) of :func:`deriv_lorentzian`."""
    h = 0.5 * peak.fwhm
    x = np.asarray(delta, dtype=float) - peak.center
    q = x * x + h * h
    return -2.0 * peak.amplitude * h * h * (h * h - 3.0 * x * x) / (q * q * q)


def deriv_lorentzian_jacobian(delta, peak: DerivLorentzianPeak) -> np.ndarray:
    """Partial derivatives w.r.t. (amplitude, fwhm, center); shape (n, 3)."""
    h = 0.5 * peak.fwhm
    x = np.asarray(delta, dtype=float) - peak.center
    q = x * x + h * h
    d_amp = -2.0 * h * h * x / (q * q)
    d_fwhm = -2.0 * peak.amplitude * x * h * (x * x - h * h) / (q * q * q)
    d_center = 2.0 * peak.amplitude * h * h * (h * h - 3.0 * x * x) / (q * q * q)
    return np.stack(np.broadcast_arrays(d_amp, d_fwhm, d_center), axis=-1)


def _check_peaks(peaks: Sequence[DerivLorentzianPeak]) -> None:
    if len(peaks) != N_PEAKS:
        raise InvalidArgumentError(f"expected {N_PEAKS} peaks, got {len(peaks)}")


def spectrum_model(delta, peaks: Sequence[DerivLorentzianPeak]):
    """Sum of five derivative Lorentzians."""
    _check_peaks(peaks)
    delta = np.asarray(delta, dtype=float)
    total = np.zeros_like(delta)
    for p in peaks:
        total = total + deriv_lorentzian(delta, p)
    return total


def spectrum_slope(delta, peaks: Sequence[DerivLorentzianPeak]):
    """Analytic d(spectrum_model)/d(delta)."""
    _check_peaks(peaks)
    delta = np.asarray(delta, dtype=float)
    total = np.zeros_like(delta)
    for p in peaks:
        total = total + deriv_lorentzian_slope(delta, p)
    return total


def analytic_center_slope(peak: DerivLorentzianPeak) -> float:
    """Slope of one derivative Lorentzian at its own center, ``-8 A / fwhm^2``."""
    if peak.fwhm == 0:
        raise SingularParameterError("fwhm is zero")
    return -8.0 * peak.amplitude / peak.fwhm**2


def field_response(slope: float, gamma_e: float = GAMMA_E) -> float:
    """Photocurrent per tesla, ``gamma_e * slope``."""
    _check_finite(slope=slope, gamma_e=gamma_e)
    return gamma_e * slope


def hyperfine_centers(a_hf: float = HYPERFINE_SPLITTING) -> np.ndarray:
    if not a_hf > 0:
        raise InvalidArgumentError("hyperfine splitting must be positive")
    return a_hf * np.arange(-2.0, 3.0)


def three_tone_peaks(
    central_slope: float = 324e-12,
    fwhm: float = 0.48e6,
    a_hf: float = HYPERFINE_SPLITTING,
    relative_amplitudes: Sequence[float] = THREE_TONE_RELATIVE_AMPLITUDES,
) -> tuple[DerivLorentzianPeak, ...]:
    """Five peaks on the hyperfine grid scaled so the slope at zero detuning is ``central_slope``."""
    centers = hyperfine_centers(a_hf)
    unit = [DerivLorentzianPeak(r, fwhm, c) for r, c in zip(relative_amplitudes, centers)]
    per_unit = float(spectrum_slope(0.0, unit))
    if per_unit == 0:
        raise SingularParameterError("relative amplitudes give zero central slope")
    scale = central_slope / per_unit
    return tuple(DerivLorentzianPeak(r * scale, fwhm, c) for r, c in zip(relative_amplitudes, centers))

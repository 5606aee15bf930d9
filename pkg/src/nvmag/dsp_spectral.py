"""Amplitude spectral density, notch/band-pass filtering and NEP bandwidth."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy import signal

from . import kernels
from .errors import AnalysisWarning, InvalidArgumentError
from .rng import child_seeds, make_rng, standard_normal
from .timetrace import TimeTrace

_SQRT2M1 = math.sqrt(2.0) - 1.0


@dataclass
class AmplitudeSpectrum:
    frequencies: np.ndarray
    density: np.ndarray
    n_averages: int
    resolution_bw: float
    units: str = "tesla"

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.frequencies.shape != self.density.shape:
            raise InvalidArgumentError("frequencies and density must have equal length")

    def peak_frequency(self) -> float:
        return float(self.frequencies[np.argmax(self.density)])


def asd(
    trace: TimeTrace,
    segment_length: int | None = None,
    n_segments: int | None = None,
    window: str = "rect",
) -> AmplitudeSpectrum:
    """Single-sided amplitude spectral density, averaged over segments.

    The trace is cut into ``n_segments`` contiguous, non-overlapping segments
    of ``segment_length`` samples; the mean of each segment is removed and
    the power spectra are averaged before taking the square root. With the
    rectangular window ``sum(density**2) * resolution_bw`` equals the
    segment variance exactly.
    """
    x = trace.samples
    n_total = x.size
    if segment_length is None:
        segment_length = n_total // (n_segments or 1)
    if n_segments is None:
        n_segments = max(n_total // segment_length, 1) if segment_length else 1
    if segment_length < 2 or n_segments < 1:
        raise InvalidArgumentError("segment_length must be >= 2 and n_segments >= 1")
    if segment_length * n_segments > n_total:
        raise InvalidArgumentError(
            f"{n_segments} segments of {segment_length} samples exceed the trace length {n_total}"
        )
    segs = x[: segment_length * n_segments].reshape(n_segments, segment_length)
    segs = segs - segs.mean(axis=1, keepdims=True)
    if window == "rect":
        w = np.ones(segment_length)
    elif window == "hann":
        w = signal.get_window("hann", segment_length, fftbins=True)
    else:
        raise InvalidArgumentError(f"unknown window {window!r}")
    spec = np.fft.rfft(segs * w, axis=1)
    power = np.mean(np.abs(spec) ** 2, axis=0) / (trace.fs * np.sum(w**2))
    power[1:] *= 2.0
    if segment_length % 2 == 0:
        power[-1] /= 2.0  # Nyquist bin is not mirrored
    freqs = np.fft.rfftfreq(segment_length, d=1.0 / trace.fs)
    return AmplitudeSpectrum(freqs, np.sqrt(power), n_segments, trace.fs / segment_length, trace.units)


def band_average(spectrum: AmplitudeSpectrum, f_lo: float, f_hi: float) -> float:
    """Root-mean-square density over bins with ``f_lo <= f <= f_hi``."""
    sel = (spectrum.frequencies >= f_lo) & (spectrum.frequencies <= f_hi)
    if not np.any(sel):
        raise InvalidArgumentError(f"no spectral bins in [{f_lo}, {f_hi}] Hz")
    return float(np.sqrt(np.mean(spectrum.density[sel] ** 2)))


# ---------------------------------------------------------------------------
# filters


class FilterSpec(Protocol):
    def apply(self, x: np.ndarray, fs: float) -> np.ndarray: ...


def _bandpass_edges_for_zero_phase(f_lo: float, f_hi: float, order: int, fs: float) -> tuple[float, float]:
    """Single-pass Butterworth edges whose forward-backward response is -3 dB at f_lo, f_hi.

    Works in the prewarped analog domain where the digital band-pass is an
    exact low-pass-to-band-pass transform of the Butterworth prototype.
    """
    x = _SQRT2M1 ** (1.0 / (2 * order))
    w1 = math.tan(math.pi * f_lo / fs)
    w2 = math.tan(math.pi * f_hi / fs)
    w0sq = w1 * w2
    bw = (w2 - w1) / x
    w2p = 0.5 * (bw + math.sqrt(bw * bw + 4.0 * w0sq))
    w1p = w0sq / w2p
    return math.atan(w1p) * fs / math.pi, math.atan(w2p) * fs / math.pi


@dataclass
class FilterChain:
    """Notches plus an optional Butterworth band-pass.

    ``notches`` are ``(center_hz, q)``; ``bandpass`` is ``(f_lo, f_hi, order)``.
    The cut-offs and notch widths describe the response actually applied:
    in zero-phase mode the single-pass sections are widened so that the
    forward-backward response is -3 dB at the stated frequencies.
    """

    notches: tuple[tuple[float, float], ...] = ()
    bandpass: tuple[float, float, int] | None = None
    zero_phase: bool = True

    def __post_init__(self):
        self.notches = tuple((float(c), float(q)) for c, q in self.notches)
        if self.bandpass is not None:
            lo, hi, order = self.bandpass
            if not (0 < lo < hi):
                raise InvalidArgumentError("band-pass requires 0 < f_lo < f_hi")
            self.bandpass = (float(lo), float(hi), int(order))

    @classmethod
    def standard(cls, fs: float = 400.0, mains: float = 50.0, q: float = 30.0, bandpass=(5.0, 100.0, 2)):
        """Notches on every mains harmonic below Nyquist plus the 5-100 Hz band-pass."""
        harmonics = tuple((k * mains, q) for k in range(1, int(math.ceil(fs / 2 / mains))) if k * mains < fs / 2)
        return cls(harmonics, bandpass)

    def validate(self, fs: float) -> None:
        nyq = fs / 2.0
        for c, q in self.notches:
            if not (0 < c < nyq):
                raise InvalidArgumentError(f"notch at {c} Hz outside (0, {nyq}) Hz")
            if q <= 0:
                raise InvalidArgumentError("notch quality factor must be positive")
        if self.bandpass is not None and not self.bandpass[1] < nyq:
            raise InvalidArgumentError(f"band-pass upper edge {self.bandpass[1]} Hz at or above Nyquist")

    def sos(self, fs: float) -> np.ndarray:
        self.validate(fs)
        sections = []
        if self.bandpass is not None:
            lo, hi, order = self.bandpass
            if self.zero_phase:
                lo, hi = _bandpass_edges_for_zero_phase(lo, hi, order, fs)
                if not hi < fs / 2:
                    raise InvalidArgumentError("band-pass too close to Nyquist for zero-phase design")
            sections.append(signal.butter(order, [lo, hi], btype="bandpass", fs=fs, output="sos"))
        for c, q in self.notches:
            # forward-backward squares the notch: widen it so the -3 dB width stays c / q
            q_eff = q / math.sqrt(_SQRT2M1) if self.zero_phase else q
            b, a = signal.iirnotch(c, q_eff, fs=fs)
            sections.append(signal.tf2sos(b, a))
        if not sections:
            return np.array([[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]])
        return np.vstack(sections)

    def apply(self, x: np.ndarray, fs: float) -> np.ndarray:
        sos = self.sos(fs)
        x = np.asarray(x, dtype=float)
        if self.zero_phase:
            padlen = min(x.size - 1, int(round(fs)))
            return signal.sosfiltfilt(sos, x, padlen=padlen)
        return signal.sosfilt(sos, x)

    def response(self, f, fs: float) -> np.ndarray:
        """Complex response applied to a signal at frequencies ``f`` (real for zero phase)."""
        _, h = signal.sosfreqz(self.sos(fs), worN=np.atleast_1d(np.asarray(f, dtype=float)), fs=fs)
        return np.abs(h) ** 2 if self.zero_phase else h


def apply_filter_chain(trace: TimeTrace, chain: FilterChain) -> TimeTrace:
    return trace.replace(chain.apply(trace.samples, trace.fs))


def onepole_coefficient(f3db: float, fs: float, order: int) -> float:
    """Pole ``a`` of ``y[n] = a y[n-1] + (1-a) x[n]`` such that ``order`` cascaded
    sections have exactly -3 dB at ``f3db``."""
    if not 0 < f3db < fs / 2:
        raise InvalidArgumentError(f"cut-off {f3db} Hz must lie in (0, {fs / 2}) Hz")
    if order < 1:
        raise InvalidArgumentError("order must be >= 1")
    g2 = 2.0 ** (-1.0 / order)  # per-section power gain at f3db
    c = math.cos(2.0 * math.pi * f3db / fs)
    # (1-a)^2 = g2 (1 - 2 a c + a^2)
    k = 1.0 - g2 * c
    return (k - math.sqrt(k * k - (1.0 - g2) ** 2)) / (1.0 - g2)


@dataclass
class LowpassCascade:
    """``order`` identical single-pole low-pass sections, -3 dB overall at ``f3db``."""

    f3db: float
    order: int = 1

    def coefficient(self, fs: float) -> float:
        return onepole_coefficient(self.f3db, fs, self.order)

    def apply(self, x: np.ndarray, fs: float, state: np.ndarray | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = self.coefficient(fs)
        if state is None:
            state = np.full(self.order, x[0] if x.size else 0.0)
        return kernels.onepole_cascade(x, a, state)

    def response(self, f, fs: float) -> np.ndarray:
        a = self.coefficient(fs)
        z = np.exp(-2j * np.pi * np.asarray(f, dtype=float) / fs)
        return ((1.0 - a) / (1.0 - a * z)) ** self.order


@dataclass
class BrickWall:
    """Ideal band-pass applied in the frequency domain."""

    f_lo: float
    f_hi: float

    def apply(self, x: np.ndarray, fs: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        spec = np.fft.rfft(x)
        f = np.fft.rfftfreq(x.size, 1.0 / fs)
        spec[(f < self.f_lo) | (f > self.f_hi)] = 0.0
        return np.fft.irfft(spec, n=x.size)

    def response(self, f, fs: float) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return ((f >= self.f_lo) & (f <= self.f_hi)).astype(float)


@dataclass
class Identity:
    def apply(self, x: np.ndarray, fs: float) -> np.ndarray:
        return np.asarray(x, dtype=float).copy()

    def response(self, f, fs: float) -> np.ndarray:
        return np.ones_like(np.asarray(f, dtype=float))


@dataclass
class NepResult:
    f_nep: float
    std_error: float
    trials: int
    status: str = "ok"

    def __float__(self) -> float:
        return self.f_nep


def nep_bandwidth(
    filt: FilterSpec | Callable[[np.ndarray, float], np.ndarray],
    fs: float,
    n_samples: int = 2**16,
    trials: int = 10,
    seed: int = 0,
    method: str = "montecarlo",
    discard: int | None = None,
) -> NepResult:
    """Noise-equivalent-power bandwidth of a filter.

    ``montecarlo``: filter unit white noise and return
    ``var(out) / var(in) * fs / 2`` averaged over ``trials`` independent
    streams, discarding ``discard`` samples at each end to drop transients.
    ``response``: integrate ``|H(f)|^2`` over ``[0, fs/2]``; needs a filter
    with a ``response`` method.
    """
    if method == "response":
        if not hasattr(filt, "response"):
            raise InvalidArgumentError("filter has no frequency response")
        f = np.linspace(0.0, fs / 2.0, 2**16 + 1)
        g = np.abs(filt.response(f, fs)) ** 2
        value = float(np.trapezoid(g, f))
        return NepResult(value, 0.0, 0, "ok" if value > 0 else "degenerate")
    if method != "montecarlo":
        raise InvalidArgumentError(f"unknown method {method!r}")
    if trials < 1 or n_samples < 16:
        raise InvalidArgumentError("need trials >= 1 and n_samples >= 16")
    apply = filt.apply if hasattr(filt, "apply") else filt
    if discard is None:
        discard = min(n_samples // 16, 2048)
    ratios = np.empty(trials)
    for k, ss in enumerate(child_seeds(seed, trials)):
        x = standard_normal(make_rng(ss), n_samples)
        y = np.asarray(apply(x, fs))
        core = slice(discard, n_samples - discard)
        ratios[k] = np.var(y[core]) / np.var(x[core])
    values = ratios * fs / 2.0
    mean = float(values.mean())
    sem = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    if mean <= 1e-12 * fs:
        warnings.warn("filter passes no noise; NEP bandwidth is zero", AnalysisWarning, stacklevel=2)
        return NepResult(0.0, 0.0, trials, "degenerate")
    return NepResult(mean, sem, trials)

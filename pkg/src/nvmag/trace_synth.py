"""Synthetic demodulated magnetometer traces.

Works at baseband: white current noise from the noise budget plus magnetic
field components (mains harmonics, slow drift, injected tones) are generated
at ``oversample * fs``, passed through the lock-in low-pass and reduced to
``fs`` by block averaging. An optional integral servo mimics locking the
microwave carrier to the resonance.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dsp_spectral import LowpassCascade, nep_bandwidth
from .errors import InvalidArgumentError, NoSolutionError, SingularParameterError
from .model_odmr import SensorConfig
from .noise_budget import DEFAULT_BUDGET, NoiseBudget, noise_model_eval
from .rng import make_rng, standard_normal
from .timetrace import TimeTrace

_CHUNK = 1 << 18  # output samples per generation block; part of the stream definition
_WARMUP = 256  # output samples discarded while the low-pass settles


@dataclass(frozen=True)
class ServoSpec:
    lpf_cutoff: float = 10.0
    loop_bandwidth: float = 2.0


@dataclass
class SynthSpec:
    sensor: SensorConfig = field(default_factory=SensorConfig)
    budget: NoiseBudget = DEFAULT_BUDGET
    line_harmonics: tuple[tuple[float, float], ...] = ()  # (Hz, T)
    drift: tuple[float, float] | None = None  # (period s, amplitude T)
    injected_signals: tuple[tuple[float, float, float], ...] = ()  # (Hz, T, rad)
    servo: ServoSpec | None = None
    duration: float = 5.0
    seed: int = 0
    oversample: int = 8
    lockin_order: int | None = None  # None: calibrated from the sensor's NEP bandwidth
    units: str = "tesla"
    noise: bool = True

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError("duration must be positive")
        self.line_harmonics = tuple(tuple(map(float, h)) for h in self.line_harmonics)
        self.injected_signals = tuple(tuple(map(float, s)) for s in self.injected_signals)
        amps = [a for _, a in self.line_harmonics] + [a for _, a, _ in self.injected_signals]
        if self.drift is not None:
            amps.append(self.drift[1])
            if not self.drift[0] > 0:
                raise InvalidArgumentError("drift period must be positive")
        if any(a < 0 for a in amps):
            raise InvalidArgumentError("amplitudes must be nonnegative")
        if self.oversample < 1:
            raise InvalidArgumentError("oversample must be >= 1")
        if self.units not in ("tesla", "ampere"):
            raise InvalidArgumentError("units must be 'tesla' or 'ampere'")


def apply_lockin_lpf(trace: TimeTrace, f3db: float, order: int = 4) -> TimeTrace:
    """Cascade of ``order`` identical single-pole low-passes, -3 dB overall at ``f3db``.

    Filter state starts at the first sample, so a constant passes unchanged.
    """
    if not 0 < f3db < trace.fs / 2:
        raise InvalidArgumentError(f"f3db={f3db} Hz must lie below Nyquist ({trace.fs / 2} Hz)")
    return trace.replace(LowpassCascade(f3db, order).apply(trace.samples, trace.fs))


def cascade_nep_ratios(max_order: int = 12, eval_ratio: float = 200.0) -> np.ndarray:
    """NEP / f3db of cascades of order 1..max_order, evaluated well above Nyquist of the cut-off."""
    return np.array(
        [nep_bandwidth(LowpassCascade(1.0, n), eval_ratio, method="response").f_nep for n in range(1, max_order + 1)]
    )


@functools.lru_cache(maxsize=None)
def _ratios(max_order: int) -> tuple[float, ...]:
    return tuple(cascade_nep_ratios(max_order))


def calibrate_order(f3db: float, target_nep: float, max_order: int = 12, tol: float = 0.05) -> int:
    """Cascade order whose NEP/f3db ratio is closest to ``target_nep / f3db``."""
    if not (f3db > 0 and target_nep > 0):
        raise InvalidArgumentError("f3db and target_nep must be positive")
    ratios = np.array(_ratios(max_order))
    target = target_nep / f3db
    if not ratios.min() - tol <= target <= ratios.max() + tol:
        raise NoSolutionError(
            f"NEP/f3db ratio {target:.4f} unreachable; orders 1..{max_order} give "
            f"{ratios.min():.4f} .. {ratios.max():.4f}"
        )
    return int(np.argmin(np.abs(ratios - target))) + 1


def servo_coefficients(fs: float, lpf_cutoff: float, loop_bandwidth: float) -> tuple[float, float]:
    """(alpha, gain) of the discrete servo loop in :mod:`nvmag.kernels`."""
    alpha = 1.0 - math.exp(-2.0 * math.pi * lpf_cutoff / fs)
    gain = 2.0 * math.pi * loop_bandwidth / fs
    return alpha, gain


def servo_lock(trace: TimeTrace, lpf_cutoff: float = 10.0, loop_bandwidth: float = 2.0) -> TimeTrace:
    """Residual of an integral servo that tracks the low-pass-filtered trace.

    The integrator's unity-gain frequency is ``loop_bandwidth``; components
    well below it are suppressed roughly as ``f / loop_bandwidth``.
    """
    if not 0 < loop_bandwidth < lpf_cutoff < trace.fs / 2:
        raise InvalidArgumentError("require 0 < loop_bandwidth < lpf_cutoff < fs/2")
    alpha, gain = servo_coefficients(trace.fs, lpf_cutoff, loop_bandwidth)
    return trace.replace(kernels.servo(trace.samples, alpha, gain))


def servo_response(f, fs: float, lpf_cutoff: float = 10.0, loop_bandwidth: float = 2.0) -> np.ndarray:
    """Complex closed-loop response of :func:`servo_lock`."""
    alpha, gain = servo_coefficients(fs, lpf_cutoff, loop_bandwidth)
    b, a = kernels.servo_transfer_coefficients(alpha, gain)
    z = np.exp(-2j * np.pi * np.asarray(f, dtype=float) / fs)
    return np.polyval(b[::-1], z) / np.polyval(a[::-1], z)


def lockin_order(spec: SynthSpec) -> int:
    if spec.lockin_order is not None:
        return spec.lockin_order
    return calibrate_order(spec.sensor.lockin_f3db, spec.sensor.lockin_nep_bw)


def chain_response(spec: SynthSpec, f) -> np.ndarray:
    """Complex gain from a field tone at ``f`` to the output samples (without servo)."""
    fs = spec.sensor.sampling_frequency
    fs_o = fs * spec.oversample
    lpf = LowpassCascade(spec.sensor.lockin_f3db, lockin_order(spec))
    f = np.asarray(f, dtype=float)
    h = lpf.response(f, fs_o)
    m = spec.oversample
    z = np.exp(-2j * np.pi * f / fs_o)
    avg = sum(z**k for k in range(m)) / m
    # block average ends m-1 fast samples after the output timestamp; undo that delay
    return h * avg * np.exp(2j * np.pi * f * (m - 1) / fs_o)


def field_noise_density(spec: SynthSpec) -> float:
    """White field-noise density implied by the budget, T/sqrt(Hz)."""
    n_i = noise_model_eval(spec.sensor.fl_photocurrent, spec.budget)
    resp = spec.sensor.response
    if resp == 0:
        if n_i > 0:
            raise SingularParameterError("zero slope: current noise cannot be referred to field")
        return 0.0
    return n_i / abs(resp)


def _deterministic(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    for f, a in spec.line_harmonics:
        out += a * np.sin(2.0 * np.pi * f * t)
    if spec.drift is not None:
        period, a = spec.drift
        out += a * np.sin(2.0 * np.pi * t / period)
    for f, a, ph in spec.injected_signals:
        out += a * np.sin(2.0 * np.pi * f * t + ph)
    return out


def synthesize(spec: SynthSpec) -> TimeTrace:
    """Generate the trace described by ``spec``.

    Identical specs (including ``seed``) give bit-identical traces on the
    same backend.
    """
    sensor = spec.sensor
    fs = sensor.sampling_frequency
    m = spec.oversample
    fs_o = fs * m
    n_out = int(round(spec.duration * fs))
    if n_out < 1:
        raise InvalidArgumentError("duration shorter than one sample")
    order = lockin_order(spec)
    lpf = LowpassCascade(sensor.lockin_f3db, order)
    a = lpf.coefficient(fs_o)

    if spec.units == "tesla":
        scale = 1.0
        noise_density = field_noise_density(spec) if spec.noise else 0.0
    else:
        scale = sensor.response  # A/T
        noise_density = noise_model_eval(sensor.fl_photocurrent, spec.budget) if spec.noise else 0.0
    sigma = noise_density * math.sqrt(fs_o / 2.0)

    rng = make_rng(spec.seed)
    state = np.zeros(order)
    out = np.empty(n_out)
    pos = -_WARMUP
    while pos < n_out:
        n_blk = min(_CHUNK, n_out - pos)
        k0 = pos * m
        t = (k0 + np.arange(n_blk * m)) / fs_o
        x = scale * _deterministic(spec, t)
        if sigma > 0:
            x += sigma * standard_normal(rng, n_blk * m)
        if pos == -_WARMUP:
            state[:] = x[0]
        y = kernels.onepole_cascade(x, a, state).reshape(n_blk, m).mean(axis=1)
        lo = max(0, -pos)
        out[pos + lo : pos + n_blk] = y[lo:]
        pos += n_blk

    trace = TimeTrace(out, fs, spec.units)
    if spec.servo is not None:
        trace = servo_lock(trace, spec.servo.lpf_cutoff, spec.servo.loop_bandwidth)
    return trace


def preset_synth_spec(duration: float = 5.0, seed: int = 0, **overrides) -> SynthSpec:
    """Operating point at 6.4 mA and 332 pA/Hz with mains pick-up and a 40-s drift."""
    kwargs = dict(
        sensor=SensorConfig(fl_photocurrent=6.4e-3, zero_crossing_slope=332e-12),
        budget=DEFAULT_BUDGET,
        line_harmonics=((50.0, 200e-12), (100.0, 50e-12), (150.0, 20e-12)),
        drift=(40.0, 1e-12),
        duration=duration,
        seed=seed,
    )
    kwargs.update(overrides)
    return SynthSpec(**kwargs)


def white_field_spec(eta: float, duration: float, seed: int = 0, sensor: SensorConfig | None = None) -> SynthSpec:
    """Spec for pure white field noise whose sensitivity ``eta`` is given in T/sqrt(Hz).

    The one-sided field density is ``sqrt(2) * eta``; it is expressed as an
    electrical-floor-only budget so the usual synthesis path applies.
    """
    sensor = sensor or SensorConfig()
    n_current = math.sqrt(2.0) * eta * abs(sensor.response)
    return SynthSpec(sensor=sensor, budget=NoiseBudget(n_current, 0.0, 0.0), duration=duration, seed=seed)

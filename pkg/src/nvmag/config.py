"""Run configuration: a sectioned key-value file with units in the key names.

``load_config("paper")`` returns the built-in preset for the 6.4 mA operating
point. Any other argument is read as an INI-style file; sections that are
absent fall back to defaults, except ``[synth]`` which stays unset.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dsp_spectral import FilterChain
from .errors import ConfigError
from .model_odmr import SensorConfig
from .noise_budget import NoiseBudget
from .trace_synth import ServoSpec, SynthSpec

DEFAULT_PRESET = """\
[sensor]
# fluorescence photocurrent at the sensitivity operating point
fl_photocurrent_a = 6.4e-3
# zero-crossing slope of the central feature at that operating point
zero_crossing_slope_a_per_hz = 332e-12
# NV gyromagnetic ratio, 28.0 GHz/T
gyromagnetic_ratio_hz_per_t = 2.80e10
# 14N hyperfine splitting used for three-tone driving
hyperfine_splitting_hz = 2.16e6
# microwave frequency modulation: 6.2 kHz rate, 160 kHz depth
mod_frequency_hz = 6.2e3
mod_depth_hz = 1.6e5
# ODMR peak contrast
contrast = 0.03
# three-tone enhancement of the central peak amplitude
three_tone_gain = 2.5
# bias field along the NV axis
bias_field_t = 0.9e-3
# lock-in low-pass: 149.4 Hz at -3 dB, 168.8 Hz noise-equivalent bandwidth
lockin_f3db_hz = 149.4
lockin_nep_bw_hz = 168.8
# digitiser rate
sampling_frequency_hz = 400

[budget]
# electrical floor with the laser blocked
n_elec_a_per_sqrthz = 20e-12
# shot coefficient (5.0 +- 0.6) e-19 A/Hz
p1_a_per_hz = 5.0e-19
p1_std_a_per_hz = 0.6e-19
# intensity coefficient (5.0 +- 0.5) e-17 /Hz
p2_per_hz = 5.0e-17
p2_std_per_hz = 0.5e-17

[synth]
# one 5-s record at 400 Hz
duration_s = 5
seed = 0
line_harmonics_hz_t = 50:200e-12, 100:50e-12, 150:20e-12
# slow periodic fluctuation near 0.025 Hz
drift_period_s = 40
drift_amplitude_t = 1e-12
injected_signals_hz_t_rad =
servo = off
# servo acts on the 10-Hz low-passed signal with ~2 Hz loop bandwidth
servo_lpf_hz = 10
servo_loop_bw_hz = 2
oversample = 8
units = tesla

[filters]
# notches on mains harmonics below Nyquist, 5-100 Hz band-pass
mains_hz = 50
notch_q = 30
notch_centers_hz = auto
bandpass_lo_hz = 5
bandpass_hi_hz = 100
bandpass_order = 2
zero_phase = on

[analysis]
asd = on
sensitivity = on
adev = on
asd_segments = 1
nep_samples = 65536
nep_trials = 10
adev_per_decade = 10
adev_notch_hz =

[output]
dir = out
format = csv
"""


@dataclass
class AnalysisOptions:
    asd: bool = True
    sensitivity: bool = True
    adev: bool = True
    asd_segments: int = 1
    nep_samples: int = 65536
    nep_trials: int = 10
    adev_per_decade: int = 10
    adev_notch_hz: float | None = None


@dataclass
class RunConfig:
    sensor: SensorConfig = field(default_factory=SensorConfig)
    budget: NoiseBudget = field(default_factory=lambda: NoiseBudget(20e-12, 5.0e-19, 5.0e-17))
    synth: SynthSpec | None = None
    filters: FilterChain = field(default_factory=FilterChain.standard)
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    output_dir: Path = Path("out")
    seed: int = 0
    format: str = "csv"

    def with_seed(self, seed: int) -> "RunConfig":
        synth = replace(self.synth, seed=seed) if self.synth is not None else None
        return replace(self, seed=seed, synth=synth)


_SENSOR_KEYS = {
    "fl_photocurrent_a": "fl_photocurrent",
    "zero_crossing_slope_a_per_hz": "zero_crossing_slope",
    "gyromagnetic_ratio_hz_per_t": "gyromagnetic_ratio",
    "hyperfine_splitting_hz": "hyperfine_splitting",
    "mod_frequency_hz": "mod_frequency",
    "mod_depth_hz": "mod_depth",
    "contrast": "contrast",
    "three_tone_gain": "three_tone_gain",
    "bias_field_t": "bias_field",
    "lockin_f3db_hz": "lockin_f3db",
    "lockin_nep_bw_hz": "lockin_nep_bw",
    "sampling_frequency_hz": "sampling_frequency",
}
_BUDGET_KEYS = {"n_elec_a_per_sqrthz", "p1_a_per_hz", "p1_std_a_per_hz", "p2_per_hz", "p2_std_per_hz"}
_SYNTH_KEYS = {
    "duration_s", "seed", "line_harmonics_hz_t", "drift_period_s", "drift_amplitude_t",
    "injected_signals_hz_t_rad", "servo", "servo_lpf_hz", "servo_loop_bw_hz", "oversample", "units",
}
_FILTER_KEYS = {
    "mains_hz", "notch_q", "notch_centers_hz", "bandpass_lo_hz", "bandpass_hi_hz", "bandpass_order", "zero_phase",
}
_ANALYSIS_KEYS = {f for f in AnalysisOptions.__dataclass_fields__}
_OUTPUT_KEYS = {"dir", "format"}
_SECTIONS = {
    "sensor": set(_SENSOR_KEYS),
    "budget": _BUDGET_KEYS,
    "synth": _SYNTH_KEYS,
    "filters": _FILTER_KEYS,
    "analysis": _ANALYSIS_KEYS,
    "output": _OUTPUT_KEYS,
}


def _tuples(text: str, width: int, where: str) -> tuple[tuple[float, ...], ...]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        parts = item.split(":")
        if len(parts) != width:
            raise ConfigError(f"{where}: expected {width} ':'-separated numbers in {item!r}")
        try:
            out.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return tuple(out)


def _get(sec: configparser.SectionProxy, key: str, kind, default=None):
    if key not in sec or sec[key].strip() == "":
        return default
    try:
        if kind is bool:
            return sec.getboolean(key)
        return kind(sec[key])
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{name}]")
        unknown = set(cp[name]) - _SECTIONS[name]
        if unknown:
            raise ConfigError(f"{source}: unknown keys in [{name}]: {sorted(unknown)}")

    cfg = RunConfig()
    try:
        if cp.has_section("sensor"):
            s = cp["sensor"]
            kw = {attr: _get(s, key, float) for key, attr in _SENSOR_KEYS.items() if _get(s, key, float) is not None}
            cfg.sensor = SensorConfig(**kw)
        if cp.has_section("budget"):
            b = cp["budget"]
            d = cfg.budget
            s1 = _get(b, "p1_std_a_per_hz", float, 0.0)
            s2 = _get(b, "p2_std_per_hz", float, 0.0)
            cfg.budget = NoiseBudget(
                _get(b, "n_elec_a_per_sqrthz", float, d.n_elec),
                _get(b, "p1_a_per_hz", float, d.p1),
                _get(b, "p2_per_hz", float, d.p2),
                covariance=np.diag([s1**2, s2**2]),
            )
        if cp.has_section("filters"):
            f = cp["filters"]
            fs = cfg.sensor.sampling_frequency
            q = _get(f, "notch_q", float, 30.0)
            centers = (f.get("notch_centers_hz", "auto") or "auto").strip()
            if centers == "auto":
                mains = _get(f, "mains_hz", float, 50.0)
                notches = tuple((k * mains, q) for k in range(1, int(fs / 2 / mains) + 1) if k * mains < fs / 2)
            elif centers.lower() == "none":
                notches = ()
            else:
                notches = tuple((float(c), q) for c in centers.split(","))
            lo = _get(f, "bandpass_lo_hz", float)
            hi = _get(f, "bandpass_hi_hz", float)
            bp = (lo, hi, _get(f, "bandpass_order", int, 2)) if lo is not None and hi is not None else None
            cfg.filters = FilterChain(notches, bp, _get(f, "zero_phase", bool, True))
        if cp.has_section("analysis"):
            a = cp["analysis"]
            base = AnalysisOptions()
            kw = {}
            for name, fdef in AnalysisOptions.__dataclass_fields__.items():
                default = getattr(base, name)
                kind = bool if isinstance(default, bool) else int if isinstance(default, int) else float
                kw[name] = _get(a, name, kind, default)
            cfg.analysis = AnalysisOptions(**kw)
        if cp.has_section("output"):
            o = cp["output"]
            cfg.output_dir = Path(o.get("dir", "out"))
            cfg.format = o.get("format", "csv").strip()
        if cp.has_section("synth"):
            s = cp["synth"]
            drift = None
            if _get(s, "drift_period_s", float) is not None:
                drift = (_get(s, "drift_period_s", float), _get(s, "drift_amplitude_t", float, 0.0))
            servo = None
            if _get(s, "servo", bool, False):
                servo = ServoSpec(_get(s, "servo_lpf_hz", float, 10.0), _get(s, "servo_loop_bw_hz", float, 2.0))
            seed = _get(s, "seed", int, 0)
            cfg.seed = seed
            cfg.synth = SynthSpec(
                sensor=cfg.sensor,
                budget=cfg.budget,
                line_harmonics=_tuples(s.get("line_harmonics_hz_t", ""), 2, "line_harmonics_hz_t"),
                drift=drift,
                injected_signals=_tuples(s.get("injected_signals_hz_t_rad", ""), 3, "injected_signals_hz_t_rad"),
                servo=servo,
                duration=_get(s, "duration_s", float, 5.0),
                seed=seed,
                oversample=_get(s, "oversample", int, 8),
                units=s.get("units", "tesla").strip(),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"output format must be csv or json, got {cfg.format!r}")
    return cfg


def load_config(path_or_preset: str | Path | None = "paper") -> RunConfig:
    if path_or_preset is None or str(path_or_preset) == "paper":
        return parse_config(DEFAULT_PRESET, "paper")
    path = Path(path_or_preset)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    return parse_config(path.read_text(), str(path))

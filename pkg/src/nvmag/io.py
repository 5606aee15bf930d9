"""CSV readers and writers for traces, spectra, ADEV tables, noise data and ODMR spectra.

Floats are written with 17 significant digits so every file round-trips
exactly.
"""

from __future__ import annotations

import csv
import os
import warnings
from pathlib import Path
from typing import Iterable

import numpy as np

from .dsp_spectral import AmplitudeSpectrum
from .errors import ConfigError
from .model_odmr import OdmrSpectrum
from .noise_budget import NoiseDatum
from .stability import AdevPoint
from .timetrace import TimeTrace

_F = "%.17g"

_SPECTRUM_UNITS = {"tesla": "t_per_sqrthz", "ampere": "a_per_sqrthz"}
_SPECTRUM_UNITS_INV = {v: k for k, v in _SPECTRUM_UNITS.items()}


def format_float(v) -> str:
    return _F % v


def _parse_header(line: str) -> dict[str, str]:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _read_table(path, expected: list[str]) -> tuple[dict[str, str], np.ndarray]:
    meta: dict[str, str] = {}
    with open(path, newline="") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                meta.update(_parse_header(line))
                continue
            cols = [c.strip() for c in line.split(",")]
            if cols != expected:
                raise ConfigError(f"{path}: expected columns {expected}, found {cols}")
            break
        else:
            raise ConfigError(f"{path}: missing column header {','.join(expected)}")
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)  # empty body
                data = np.loadtxt(fh, delimiter=",", comments="#", ndmin=2, dtype=float)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if data.size == 0:
        data = data.reshape(0, len(expected))
    if data.shape[1] != len(expected):
        raise ConfigError(f"{path}: expected {len(expected)} columns, found {data.shape[1]}")
    return meta, data


def write_table(path, columns: list[str], rows: Iterable[Iterable], comment: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer, str)) else format_float(v) for v in row])
    return path


def _write_array(path, columns: list[str], data: np.ndarray, comment: str | None = None) -> Path:
    """Fast path for all-float tables."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = (f"# {comment}\n" if comment else "") + ",".join(columns)
    np.savetxt(path, data, fmt=_F, delimiter=",", header=header, comments="")
    return path


def write_trace(path, trace: TimeTrace) -> Path:
    comment = f"fs_hz={format_float(trace.fs)} units={trace.units}"
    return _write_array(path, ["time_s", "value"], np.column_stack([trace.times, trace.samples]), comment)


def read_trace(path) -> TimeTrace:
    meta, data = _read_table(path, ["time_s", "value"])
    if "units" not in meta:
        raise ConfigError(f"{path}: trace header lacks a units tag")
    if "fs_hz" in meta:
        fs = float(meta["fs_hz"])
    elif data.shape[0] > 1:
        fs = 1.0 / float(np.median(np.diff(data[:, 0])))
    else:
        raise ConfigError(f"{path}: cannot determine the sampling frequency")
    start = float(data[0, 0]) if data.size else 0.0
    return TimeTrace(data[:, 1], fs, meta["units"], start)


def write_spectrum(path, spectrum: AmplitudeSpectrum) -> Path:
    comment = (
        f"units={_SPECTRUM_UNITS[spectrum.units]} rbw_hz={format_float(spectrum.resolution_bw)} n_avg={spectrum.n_averages}"
    )
    data = np.column_stack([spectrum.frequencies, spectrum.density])
    return _write_array(path, ["freq_hz", "density"], data, comment)


def read_spectrum(path) -> AmplitudeSpectrum:
    meta, data = _read_table(path, ["freq_hz", "density"])
    units = _SPECTRUM_UNITS_INV.get(meta.get("units", ""), "tesla")
    rbw = float(meta["rbw_hz"]) if "rbw_hz" in meta else float(np.diff(data[:2, 0])[0])
    return AmplitudeSpectrum(data[:, 0], data[:, 1], int(meta.get("n_avg", 1)), rbw, units)


def write_adev(path, points: list[AdevPoint]) -> Path:
    rows = ((p.tau, p.adev, p.std_error, p.n_pairs) for p in points)
    note = "stderr_t=adev/sqrt(n_pairs) with n_pairs=N//(2m), a pair-count approximation"
    return write_table(path, ["tau_s", "adev_t", "stderr_t", "n_pairs"], rows, note)


def read_adev(path) -> list[AdevPoint]:
    _, data = _read_table(path, ["tau_s", "adev_t", "stderr_t", "n_pairs"])
    return [AdevPoint(float(t), float(a), float(e), int(n)) for t, a, e, n in data]


def write_noise_data(path, data: list[NoiseDatum]) -> Path:
    rows = ((d.i_fl, d.n_far, d.rel_uncertainty) for d in data)
    return write_table(path, ["i_fl_a", "n_far_a_sqrthz", "rel_unc"], rows)


def read_noise_data(path) -> list[NoiseDatum]:
    _, data = _read_table(path, ["i_fl_a", "n_far_a_sqrthz", "rel_unc"])
    return [NoiseDatum(float(i), float(n), float(r)) for i, n, r in data]


def write_odmr(path, spectrum: OdmrSpectrum) -> Path:
    return write_table(path, ["detuning_hz", "demod_current_a"], zip(spectrum.detunings, spectrum.demod_current))


def read_odmr(path) -> OdmrSpectrum:
    _, data = _read_table(path, ["detuning_hz", "demod_current_a"])
    return OdmrSpectrum(data[:, 0], data[:, 1])


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    if not os.access(p, os.W_OK):
        raise ConfigError(f"output directory {p} is not writable")
    return p

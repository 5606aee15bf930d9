"""Command-line front end: ``nvmag <command> [options]``.

Exit status is 0 on success, 1 when a computation fails or a reproduction
row fails, and 2 for usage and configuration errors. The log level is read
from ``NVMAG_LOG_LEVEL``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, io, plotting
from .config import RunConfig, load_config
from .dsp_spectral import apply_filter_chain, asd, band_average, nep_bandwidth
from .errors import ConfigError, InvalidArgumentError, NvmagError
from .fitting import central_slope, fit_odmr_spectrum, fit_zero_crossing, synthetic_spectrum
from .model_odmr import three_tone_peaks
from .noise_budget import (
    equivalent_photocurrent,
    fit_noise_model,
    noise_components,
    noise_model_eval,
)
from .reproduce import NOISE_FIT_CURRENTS, run_reproduction
from .stability import default_taus, overlapping_adev, sensitivity
from .timetrace import TimeTrace
from .trace_synth import synthesize

log = logging.getLogger("nvmag")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write_report(out: Path, stem: str, data: dict, fmt: str) -> Path:
    if fmt == "json":
        path = out / f"{stem}.json"
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    else:
        path = out / f"{stem}.csv"
        rows = [(k, io.format_float(v) if isinstance(v, float) else str(v)) for k, v in data.items()]
        io.write_table(path, ["key", "value"], rows)
    return path


def _setup(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.format is not None:
        cfg = replace(cfg, format=args.format)
    out = io.ensure_dir(args.out if args.out is not None else cfg.output_dir)
    return cfg, out


def _to_tesla(trace: TimeTrace, cfg: RunConfig) -> TimeTrace:
    if trace.units == "tesla":
        return trace
    resp = cfg.sensor.response
    if resp == 0:
        raise ConfigError("trace is in ampere and the configured zero-crossing slope is 0; cannot convert to tesla")
    return TimeTrace(trace.samples / resp, trace.fs, "tesla", trace.start_time)


def cmd_synth(args) -> int:
    cfg, out = _setup(args)
    if cfg.synth is None:
        raise UsageError("configuration has no [synth] section")
    spec = cfg.synth
    if args.duration is not None:
        spec = replace(spec, duration=args.duration)
    trace = synthesize(spec)
    path = io.write_trace(out / "trace.csv", trace)
    std = float(np.std(trace.samples, ddof=1)) if len(trace) > 1 else 0.0
    summary = {
        "file": str(path), "samples": len(trace), "fs_hz": trace.fs, "duration_s": trace.duration,
        "std": std, "units": trace.units, "seed": spec.seed,
    }
    _write_report(out, "synth_summary", summary, cfg.format)
    if args.plot:
        plotting.plot_trace(out / "trace.svg", trace)
    print(f"wrote {path}: {len(trace)} samples at {trace.fs:g} Hz ({trace.duration:g} s), std {std:.4g} {trace.units}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg, out = _setup(args)
    trace = _to_tesla(io.read_trace(args.trace), cfg)
    opts = cfg.analysis
    report: dict = {"trace": str(args.trace), "samples": len(trace), "fs_hz": trace.fs}
    if opts.asd:
        spec = asd(trace, n_segments=opts.asd_segments)
        io.write_spectrum(out / "asd.csv", spec)
        filtered_spec = asd(apply_filter_chain(trace, cfg.filters), n_segments=opts.asd_segments)
        io.write_spectrum(out / "asd_filtered.csv", filtered_spec)
        report["asd_peak_hz"] = spec.peak_frequency()
        hi = min(50.0, trace.fs / 2)
        if hi > 5.0 and spec.frequencies.size > 2:
            report["asd_5_50hz_mean"] = band_average(filtered_spec, 5.0, hi)
        if args.plot:
            plotting.plot_spectrum(out / "asd.svg", spec)
    if opts.sensitivity:
        nep = nep_bandwidth(cfg.filters, trace.fs, n_samples=opts.nep_samples, trials=opts.nep_trials, seed=cfg.seed)
        rep = sensitivity(apply_filter_chain(trace, cfg.filters), nep.f_nep)
        report.update(eta_t_per_sqrthz=rep.eta, filtered_std_t=rep.trace_std, f_nep_hz=rep.f_nep)
    if opts.adev:
        points = overlapping_adev(
            trace, default_taus(len(trace), trace.fs, opts.adev_per_decade), prefilter_notch_hz=opts.adev_notch_hz
        )
        io.write_adev(out / "adev.csv", points)
        one = [p.adev for p in points if math.isclose(p.tau, 1.0)]
        if one:
            report["adev_1s_t"] = one[0]
        if args.plot:
            plotting.plot_adev(out / "adev.svg", points)
    _write_report(out, "analysis", report, cfg.format)
    for k, v in report.items():
        print(f"{k}: {v:.6g}" if isinstance(v, float) else f"{k}: {v}")
    return EXIT_OK


def cmd_adev(args) -> int:
    cfg, out = _setup(args)
    trace = _to_tesla(io.read_trace(args.trace), cfg)
    taus = default_taus(len(trace), trace.fs, cfg.analysis.adev_per_decade)
    points = overlapping_adev(trace, taus, prefilter_notch_hz=cfg.analysis.adev_notch_hz)
    path = io.write_adev(out / "adev.csv", points)
    if args.plot:
        plotting.plot_adev(out / "adev.svg", points)
    print(f"wrote {path}: {len(points)} averaging times")
    for p in points:
        print(f"  tau {p.tau:10.4g} s  adev {p.adev:.4g} T  +- {p.std_error:.2g}")
    return EXIT_OK


def cmd_fit_odmr(args) -> int:
    cfg, out = _setup(args)
    a_hf = cfg.sensor.hyperfine_splitting
    if args.spectrum is None:
        spec = synthetic_spectrum(three_tone_peaks(a_hf=a_hf), noise=args.noise, seed=cfg.seed)
        io.write_odmr(out / "odmr_input.csv", spec)
    else:
        spec = io.read_odmr(args.spectrum)
    fitted, result = fit_odmr_spectrum(spec, a_hf, constrain_centers=not args.free_centers)
    zc = fit_zero_crossing(fitted, window=args.window)
    report = {
        "fwhm_hz": fitted.peaks[2].fwhm,
        "central_slope_a_per_hz": central_slope(fitted),
        "zero_crossing_slope_a_per_hz": zc.slope,
        "zero_crossing_std_a_per_hz": zc.std_error,
        "iterations": result.n_iterations,
        "converged": result.converged,
        "residual_norm": result.residual_norm,
    }
    for k, pk in enumerate(fitted.peaks):
        report[f"peak{k}_amplitude"] = pk.amplitude
        report[f"peak{k}_center_hz"] = pk.center
    _write_report(out, "odmr_fit", report, cfg.format)
    if args.plot:
        plotting.plot_odmr(out / "odmr.svg", spec)
    print(
        f"fwhm {report['fwhm_hz'] / 1e6:.4f} MHz, central slope {report['central_slope_a_per_hz'] * 1e12:.2f} pA/Hz, "
        f"linear zero-crossing slope {zc.slope * 1e12:.2f} pA/Hz"
    )
    return EXIT_OK


def cmd_noise_budget(args) -> int:
    cfg, out = _setup(args)
    budget = cfg.budget
    if args.data is None:
        currents = np.array(NOISE_FIT_CURRENTS)
    else:
        data = io.read_noise_data(args.data)
        budget = fit_noise_model(data, budget.n_elec)
        currents = np.array([d.i_fl for d in data])
    rows = []
    for i in currents:
        c = noise_components(float(i), budget)
        rows.append((i, c["electrical"], c["shot"], c["intensity"], noise_model_eval(float(i), budget)))
    io.write_table(out / "noise_budget.csv", ["i_fl_a", "electrical", "shot", "intensity", "total"], rows)
    eq = equivalent_photocurrent(budget)
    report = {
        "n_elec_a_per_sqrthz": budget.n_elec, "p1_a_per_hz": budget.p1, "p1_std": budget.p1_std,
        "p2_per_hz": budget.p2, "p2_std": budget.p2_std,
        "equivalent_photocurrent_a": eq.value, "equivalent_photocurrent_std_a": eq.std,
    }
    _write_report(out, "noise_budget", report, cfg.format)
    if args.plot:
        plotting.plot_noise_budget(out / "noise_budget.svg", currents, [r[-1] for r in rows])
    print(f"p1 = {budget.p1:.4g} +- {budget.p1_std:.2g} A/Hz, p2 = {budget.p2:.4g} +- {budget.p2_std:.2g} /Hz")
    print(f"shot/intensity crossover at {eq.value * 1e3:.3f} +- {eq.std * 1e3:.3f} mA")
    return EXIT_OK


def cmd_nep(args) -> int:
    cfg, out = _setup(args)
    fs = cfg.sensor.sampling_frequency
    res = nep_bandwidth(
        cfg.filters, fs, n_samples=cfg.analysis.nep_samples, trials=cfg.analysis.nep_trials,
        seed=cfg.seed, method=args.method,
    )
    _write_report(out, "nep", {"f_nep_hz": res.f_nep, "std_error_hz": res.std_error, "status": res.status}, cfg.format)
    print(f"noise-equivalent bandwidth {res.f_nep:.3f} +- {res.std_error:.3f} Hz ({res.status})")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg, out = _setup(args)
    report = run_reproduction(cfg)
    print(report.table())
    if cfg.format == "json":
        (out / "reproduce.json").write_text(report.to_json() + "\n")
    else:
        rows = [(r.name, r.reference, r.computed, r.tolerance, "pass" if r.passed else "fail", r.note) for r in report.rows]
        io.write_table(out / "reproduce.csv", ["quantity", "reference", "computed", "tolerance", "status", "note"], rows)
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="paper", help="configuration file or 'paper' (default)")
    common.add_argument("--seed", type=int, default=None, help="override the random seed")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="report format")
    common.add_argument("--plot", action="store_true", help="also write SVG plots")

    p = argparse.ArgumentParser(prog="nvmag", description="CW-ODMR magnetometer simulation and analysis")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="synthesize a trace from the [synth] section")
    s.add_argument("--duration", type=float, default=None, help="override duration in seconds")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("analyze", parents=[common], help="ASD, sensitivity and ADEV of a trace")
    s.add_argument("trace", type=Path)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("adev", parents=[common], help="overlapping Allan deviation of a trace")
    s.add_argument("trace", type=Path)
    s.set_defaults(func=cmd_adev)

    s = sub.add_parser("fit-odmr", parents=[common], help="fit the five-peak ODMR model")
    s.add_argument("spectrum", type=Path, nargs="?", default=None, help="CSV spectrum; synthetic if omitted")
    s.add_argument("--noise", type=float, default=0.01, help="relative noise of the synthetic spectrum")
    s.add_argument("--free-centers", action="store_true")
    s.add_argument("--window", type=float, default=None, help="zero-crossing fit half-window, Hz")
    s.set_defaults(func=cmd_fit_odmr)

    s = sub.add_parser("noise-budget", parents=[common], help="evaluate or fit the photocurrent noise model")
    s.add_argument("data", type=Path, nargs="?", default=None, help="CSV of measured noise floors to fit")
    s.set_defaults(func=cmd_noise_budget)

    s = sub.add_parser("nep", parents=[common], help="noise-equivalent bandwidth of the filter chain")
    s.add_argument("--method", choices=("montecarlo", "response"), default="montecarlo")
    s.set_defaults(func=cmd_nep)

    s = sub.add_parser("reproduce", parents=[common], help="run the reproduction table")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("NVMAG_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError, InvalidArgumentError) as exc:
        print(f"nvmag {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NvmagError, OSError, ArithmeticError) as exc:
        print(f"nvmag {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

"""SVG line charts for analysis outputs. Failures are logged, never raised."""

from __future__ import annotations

import logging
from pathlib import Path

log = logging.getLogger(__name__)


def _line_plot(path, x, y, xlabel: str, ylabel: str, loglog: bool = False, yerr=None) -> Path | None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        if yerr is not None:
            ax.errorbar(x, y, yerr=yerr, fmt="o-", ms=3, lw=1)
        else:
            ax.plot(x, y, lw=1)
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        path = Path(path)
        fig.savefig(path, format="svg")
        plt.close(fig)
        return path
    except Exception as exc:
        log.warning("plot %s not written: %s", path, exc)
        return None


def plot_trace(path, trace):
    return _line_plot(path, trace.times, trace.samples, "time (s)", f"value ({trace.units})")


def plot_spectrum(path, spectrum):
    unit = "T" if spectrum.units == "tesla" else "A"
    f, d = spectrum.frequencies[1:], spectrum.density[1:]
    return _line_plot(path, f, d, "frequency (Hz)", f"ASD ({unit}/sqrt(Hz))", loglog=True)


def plot_adev(path, points):
    tau = [p.tau for p in points]
    return _line_plot(
        path, tau, [p.adev for p in points], "tau (s)", "Allan deviation (T)", loglog=True,
        yerr=[p.std_error for p in points],
    )


def plot_odmr(path, spectrum, model=None):
    return _line_plot(path, spectrum.detunings, spectrum.demod_current, "detuning (Hz)", "demodulated current (A)")


def plot_noise_budget(path, currents, total):
    return _line_plot(path, currents, total, "photocurrent (A)", "noise (A/sqrt(Hz))", loglog=True)

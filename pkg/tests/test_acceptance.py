"""Acceptance criteria, one test per criterion, each at its stated tolerance.

A one-line pass/fail summary per criterion is printed at the end of the run.
"""

import math

import numpy as np
import pytest

from nvmag.dsp_spectral import BrickWall, FilterChain, LowpassCascade, apply_filter_chain, asd, nep_bandwidth
from nvmag.fitting import central_slope, fit_odmr_spectrum, synthetic_spectrum
from nvmag.model_odmr import three_tone_peaks
from nvmag.noise_budget import (
    DEFAULT_BUDGET,
    equivalent_photocurrent,
    field_noise_floor,
    fit_noise_model,
    reduction_rate,
    shot_noise_density,
    synthetic_noise_data,
)
from nvmag.stability import loglog_slope, min_detectable_field, overlapping_adev, sensitivity
from nvmag.timetrace import TimeTrace
from nvmag.trace_synth import preset_synth_spec, synthesize, white_field_spec

PT = 1e-12
FS = 400.0
CURRENTS = (1e-3, 2e-3, 5e-3, 10e-3, 20e-3, 30e-3)


def rel(value, target):
    return abs(value / target - 1.0)


@pytest.mark.acceptance(1, title="shot-noise-limited field noise 6.9 pT/rtHz +-2%")
def test_c01_shot_noise_limited_field_noise():
    value = field_noise_floor(shot_noise_density(6.4e-3, balanced=True), 332e-12, 2.80e10)
    print(f"field noise floor {value / PT:.4f} pT/rtHz")
    assert rel(value, 6.9 * PT) <= 0.02


@pytest.mark.acceptance(2, title="balanced-detection reduction rate 1.9e-2 +-2%")
def test_c02_reduction_rate():
    value = reduction_rate(3.0e-9, 1.6e-9, 130e-9, 1.2e-9)
    print(f"reduction rate {value:.5e}")
    assert rel(value, 1.9e-2) <= 0.02


@pytest.mark.acceptance(3, title="shot noise at 25 mA in 168.8 Hz: 1.6 nA balanced, 1.2 nA unbalanced, +-3%")
def test_c03_shot_noise_magnitudes():
    bw = math.sqrt(168.8)
    balanced = shot_noise_density(25e-3, balanced=True) * bw
    unbalanced = shot_noise_density(25e-3, balanced=False) * bw
    print(f"balanced {balanced * 1e9:.4f} nA, unbalanced {unbalanced * 1e9:.4f} nA")
    assert rel(balanced, 1.6e-9) <= 0.03
    assert rel(unbalanced, 1.2e-9) <= 0.03


@pytest.mark.acceptance(4, title="equivalent photocurrent 10 mA exact, uncertainty in [1.2, 2.0] mA")
def test_c04_equivalent_photocurrent():
    eq = equivalent_photocurrent(DEFAULT_BUDGET)
    print(f"equivalent photocurrent {eq.value * 1e3:.6f} +- {eq.std * 1e3:.4f} mA")
    assert eq.value == pytest.approx(10e-3, rel=1e-12, abs=0)
    assert 1.2e-3 <= eq.std <= 2.0e-3


@pytest.mark.acceptance(5, title="sensitivity identity 128 pT, 91.9 Hz -> 9.4 +- 0.1 pT/rtHz")
def test_c05_sensitivity_identity():
    trace = TimeTrace(np.array([128 * PT, -128 * PT]) / math.sqrt(2.0), FS)
    rep = sensitivity(trace, 91.9)
    assert rep.trace_std == pytest.approx(128 * PT, rel=1e-12)
    print(f"eta {rep.eta / PT:.4f} pT/rtHz")
    assert abs(rep.eta - 9.4 * PT) <= 0.1 * PT


@pytest.mark.acceptance(6, title="end-to-end eta in [8.5, 10.5] pT/rtHz and std in [115, 141] pT over 10 seeds")
def test_c06_end_to_end_sensitivity():
    chain = FilterChain.standard()
    etas, stds = [], []
    for seed in range(10):
        trace = synthesize(preset_synth_spec(duration=5.0, seed=seed))
        rep = sensitivity(apply_filter_chain(trace, chain), 91.9)
        etas.append(rep.eta)
        stds.append(rep.trace_std)
    etas, stds = np.array(etas), np.array(stds)
    print(f"eta {etas.min() / PT:.2f}..{etas.max() / PT:.2f} pT/rtHz, std {stds.min() / PT:.1f}..{stds.max() / PT:.1f} pT")
    assert np.all((etas >= 8.5 * PT) & (etas <= 10.5 * PT))
    assert np.all((stds >= 115 * PT) & (stds <= 141 * PT))


@pytest.mark.acceptance(7, title="NEP: one pole (pi/2) f3db +-2%, brick wall 95 Hz +-1%, chain 91.9 Hz +-5%")
def test_c07_nep_bandwidth():
    one_pole = nep_bandwidth(LowpassCascade(100.0, 1), 20000.0, n_samples=2**18, trials=20).f_nep
    brick = nep_bandwidth(BrickWall(5.0, 100.0), FS).f_nep
    chain = nep_bandwidth(FilterChain.standard(), FS).f_nep
    print(f"one pole {one_pole:.2f} Hz, brick wall {brick:.2f} Hz, chain {chain:.2f} Hz")
    assert rel(one_pole, math.pi / 2 * 100.0) <= 0.02
    assert rel(brick, 95.0) <= 0.01
    assert rel(chain, 91.9) <= 0.05


@pytest.mark.acceptance(8, title="ODMR fit round trip: width within 3% of 0.48 MHz, slope within 2% of 324 pA/Hz")
def test_c08_odmr_fit_round_trip():
    spectrum = synthetic_spectrum(three_tone_peaks(324e-12, 0.48e6, 2.16e6), noise=0.01, seed=0)
    fitted, result = fit_odmr_spectrum(spectrum, 2.16e6)
    width = fitted.peaks[2].fwhm
    slope = abs(central_slope(fitted))
    print(f"width {width / 1e6:.5f} MHz, slope {slope * 1e12:.3f} pA/Hz, {result.n_iterations} iterations")
    assert rel(width, 0.48e6) <= 0.03
    assert rel(slope, 324e-12) <= 0.02


@pytest.mark.acceptance(9, title="white-noise ADEV slope -0.50 +- 0.02 on [0.1, 100] s, ADEV(1 s) within 10% of 9.4 pT")
def test_c09_adev_white_noise_law():
    eta = 9.4 * PT
    trace = synthesize(white_field_spec(eta, 200 * 60, seed=0))
    taus = np.unique(np.round(np.logspace(-1, 2, 31) * FS)) / FS
    points = overlapping_adev(trace, taus)
    slope = loglog_slope(points, 0.1, 100.0)
    at_1s = next(p.adev for p in points if math.isclose(p.tau, 1.0))
    print(f"slope {slope:.4f}, ADEV(1 s) {at_1s / PT:.3f} pT (instrument reported 8.5 pT)")
    assert abs(slope + 0.5) <= 0.02
    assert rel(at_1s, eta) <= 0.10


@pytest.mark.acceptance(10, title="minimum detectable field at 1000 s = 0.30 +- 0.02 pT")
def test_c10_minimum_detectable_field():
    value = min_detectable_field(9.4 * PT, 1000.0)
    print(f"{value / PT:.4f} pT")
    assert abs(value - 0.30 * PT) <= 0.02 * PT


def _brute_adev(y, m):
    n = len(y)
    total = 0.0
    for k in range(n - 2 * m + 1):
        a = sum(y[k : k + m]) / m
        b = sum(y[k + m : k + 2 * m]) / m
        total += (b - a) ** 2
    return math.sqrt(total / (2 * (n - 2 * m + 1)))


@pytest.mark.acceptance(11, title="ADEV matches the defining sum to 1e-10; ASD Parseval to 1e-6")
def test_c11_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(10, 1001))
        y = rng.standard_normal(n) * 1e-11
        trace = TimeTrace(y, FS)
        for m in sorted({1, 2, 3, max(1, n // 10), n // 2}):
            got = overlapping_adev(trace, [m / FS])[0].adev
            ref = _brute_adev(list(y - y.mean()), m)
            worst = max(worst, abs(got - ref) / ref)
    x = rng.standard_normal(4000) * 1e-11
    spec = asd(TimeTrace(x, FS))
    parseval = rel(np.sum(spec.density**2) * spec.resolution_bw, np.var(x))
    print(f"ADEV worst relative error {worst:.2e}, Parseval relative error {parseval:.2e}")
    assert worst <= 1e-10
    assert parseval <= 1e-6


@pytest.mark.acceptance(12, title="noise fit: noiseless recovery to 1e-6; 3-sigma coverage >= 99% of 1000 noisy fits")
def test_c12_noise_model_fit_recovery():
    fit = fit_noise_model(synthetic_noise_data(DEFAULT_BUDGET, CURRENTS), DEFAULT_BUDGET.n_elec)
    noiseless = max(rel(fit.p1, DEFAULT_BUDGET.p1), rel(fit.p2, DEFAULT_BUDGET.p2))
    rng = np.random.default_rng(99)
    covered = 0
    for _ in range(1000):
        f = fit_noise_model(synthetic_noise_data(DEFAULT_BUDGET, CURRENTS, 0.05, rng), DEFAULT_BUDGET.n_elec)
        covered += abs(f.p1 - DEFAULT_BUDGET.p1) <= 3 * f.p1_std and abs(f.p2 - DEFAULT_BUDGET.p2) <= 3 * f.p2_std
    print(f"noiseless relative error {noiseless:.2e}, coverage {covered / 10:.1f}%")
    assert noiseless <= 1e-6
    assert covered >= 990

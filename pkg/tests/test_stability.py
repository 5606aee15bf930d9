import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvmag._backend import HAVE_NUMBA, use_backend
from nvmag.errors import AnalysisWarning, InvalidArgumentError
from nvmag.stability import (
    AdevPoint,
    default_taus,
    loglog_slope,
    min_detectable_field,
    overlapping_adev,
    sensitivity,
)
from nvmag.timetrace import TimeTrace
from nvmag.trace_synth import synthesize, white_field_spec

PT = 1e-12
FS = 400.0


def brute_adev(y, m):
    """Double loop over the definition."""
    n = len(y)
    total = 0.0
    count = 0
    for k in range(n - 2 * m + 1):
        a = sum(y[k : k + m]) / m
        b = sum(y[k + m : k + 2 * m]) / m
        total += (b - a) ** 2
        count += 1
    return math.sqrt(total / (2 * count))


@given(st.integers(0, 2**31), st.integers(4, 400), st.data())
def test_matches_brute_force(seed, n, data):
    y = np.random.default_rng(seed).standard_normal(n) * 5e-12 + 1e-9
    m = data.draw(st.integers(1, n // 2))
    pt = overlapping_adev(TimeTrace(y, FS), [m / FS])[0]
    ref = brute_adev(list(y - y.mean()), m)
    assert pt.adev == pytest.approx(ref, rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_ten_random_traces_against_definition(backend):
    if backend == "numba" and not HAVE_NUMBA:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(42)
    with use_backend(backend):
        for _ in range(10):
            n = int(rng.integers(20, 1001))
            y = rng.standard_normal(n)
            tr = TimeTrace(y, FS)
            for m in sorted({1, 2, 5, n // 7, n // 2}):
                got = overlapping_adev(tr, [m / FS])[0].adev
                assert got == pytest.approx(brute_adev(list(y), m), rel=1e-10)


def test_constant_trace_is_zero():
    pts = overlapping_adev(TimeTrace(np.full(500, 3e-9), FS))
    assert pts and all(p.adev == 0.0 for p in pts)


def test_alternating_trace():
    a = 2e-12
    y = a * (-1.0) ** np.arange(400)
    pt = overlapping_adev(TimeTrace(y, FS), [1 / FS])[0]
    assert pt.adev == pytest.approx(a * math.sqrt(2), rel=1e-12)
    assert pt.adev == pytest.approx(brute_adev(list(y), 1), rel=1e-12)


@pytest.fixture(scope="module")
def white_200min():
    eta = 9.4 * PT
    trace = synthesize(white_field_spec(eta, 200 * 60, seed=0))
    taus = np.unique(np.round(np.logspace(-1, 2, 31) * FS)) / FS
    return eta, overlapping_adev(trace, taus)


def test_white_noise_law(white_200min):
    eta, pts = white_200min
    for p in pts:
        if 0.1 <= p.tau <= 10.0:
            assert p.adev == pytest.approx(eta / math.sqrt(p.tau), rel=0.05)
    assert loglog_slope(pts, 0.1, 100.0) == pytest.approx(-0.5, abs=0.02)


def test_error_bars_use_pair_count():
    y = np.random.default_rng(0).standard_normal(1000)
    for p in overlapping_adev(TimeTrace(y, FS)):
        m = round(p.tau * FS)
        assert p.n_pairs == 1000 // (2 * m)
        assert p.std_error == pytest.approx(p.adev / math.sqrt(p.n_pairs))


def test_rejects_tau_off_grid():
    with pytest.raises(InvalidArgumentError):
        overlapping_adev(TimeTrace(np.zeros(100), FS), [0.0033])


def test_skips_long_tau_with_warning():
    tr = TimeTrace(np.random.default_rng(1).standard_normal(100), FS)
    with pytest.warns(AnalysisWarning):
        pts = overlapping_adev(tr, [1 / FS, 0.2])
    assert [p.tau for p in pts] == [1 / FS]


def test_notch_prefilter_removes_periodic_drift():
    fs = 10.0
    t = np.arange(20000) / fs
    noise = np.random.default_rng(3).standard_normal(t.size) * 1e-12
    y = noise + 5e-12 * np.sin(2 * np.pi * t / 40.0)
    tr = TimeTrace(y, fs)
    tau = [4.0]
    raw = overlapping_adev(tr, tau)[0].adev
    cleaned = overlapping_adev(tr, tau, prefilter_notch_hz=1 / 40.0)[0].adev
    ref = overlapping_adev(TimeTrace(noise, fs), tau)[0].adev
    assert raw > 3 * ref
    assert cleaned == pytest.approx(ref, rel=0.3)


def test_default_taus():
    taus = default_taus(8000, FS)
    assert taus[0] == 1 / FS
    assert taus[-1] == pytest.approx(4000 / FS)
    assert np.all(np.diff(taus) > 0)
    assert default_taus(1, FS).size == 0


def test_loglog_slope():
    pts = [AdevPoint(t, 3.0 * t**-0.5, 0.0, 10) for t in (0.1, 1.0, 10.0)]
    assert loglog_slope(pts) == pytest.approx(-0.5)
    with pytest.raises(InvalidArgumentError):
        loglog_slope(pts[:1])


def test_sensitivity_identity():
    # a trace whose sample standard deviation is exactly 128 pT
    tr = TimeTrace(np.array([128 * PT, -128 * PT]) / math.sqrt(2), FS)
    rep = sensitivity(tr, 91.9)
    assert rep.trace_std == pytest.approx(128 * PT)
    assert rep.eta == pytest.approx(9.44 * PT, abs=0.01 * PT)
    assert sensitivity(TimeTrace(np.zeros(10), FS), 91.9).eta == 0.0
    with pytest.raises(InvalidArgumentError):
        sensitivity(tr, 0.0)


def test_min_detectable_field():
    assert min_detectable_field(9.4 * PT, 1.0) == pytest.approx(9.4 * PT)
    assert min_detectable_field(9.4 * PT, 1000.0) == pytest.approx(0.297 * PT, abs=0.001 * PT)
    assert min_detectable_field(9.4 * PT, 400.0) == pytest.approx(0.5 * min_detectable_field(9.4 * PT, 100.0))
    with pytest.raises(InvalidArgumentError):
        min_detectable_field(9.4 * PT, 0.0)


@given(st.floats(1e-3, 1e4), st.floats(1e-15, 1e-9))
def test_min_detectable_field_scaling(t, eta):
    assert min_detectable_field(eta, 4 * t) == pytest.approx(0.5 * min_detectable_field(eta, t), rel=1e-12)

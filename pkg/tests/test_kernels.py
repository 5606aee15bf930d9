import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvmag import _backend, kernels

pytestmark = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not installed")

signals = st.integers(0, 2**31).map(lambda s: np.random.default_rng(s).standard_normal(257))


@given(signals, st.floats(0.0, 0.999), st.integers(1, 6), st.floats(-2.0, 2.0))
def test_onepole_backends_agree(x, a, order, s0):
    st1 = np.full(order, s0)
    st2 = st1.copy()
    y1 = kernels.onepole_cascade_numba(x, a, st1)
    y2 = kernels.onepole_cascade_numpy(x, a, st2)
    np.testing.assert_allclose(y1, y2, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(st1, st2, rtol=1e-10, atol=1e-12)


def test_onepole_chunked_equals_whole():
    x = np.random.default_rng(0).standard_normal(1000)
    for fn in (kernels.onepole_cascade_numba, kernels.onepole_cascade_numpy):
        whole = fn(x, 0.9, np.zeros(3))
        state = np.zeros(3)
        parts = np.concatenate([fn(x[:317], 0.9, state), fn(x[317:], 0.9, state)])
        np.testing.assert_allclose(parts, whole, rtol=1e-12, atol=1e-14)


@given(signals, st.floats(0.01, 0.9), st.floats(1e-4, 0.1))
def test_servo_backends_agree(x, alpha, gain):
    np.testing.assert_allclose(
        kernels.servo_numba(x, alpha, gain), kernels.servo_numpy(x, alpha, gain), rtol=1e-9, atol=1e-10
    )


@given(st.integers(0, 2**31), st.integers(4, 600), st.data())
def test_allan_sum_backends_agree(seed, n, data):
    y = np.random.default_rng(seed).standard_normal(n) + 3.0
    m = data.draw(st.integers(1, n // 2))
    a = kernels.allan_sum_numba(y, m)
    b = kernels.allan_sum_numpy(y, m)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


def test_allan_sum_matches_definition():
    y = np.random.default_rng(1).standard_normal(50)
    for m in (1, 3, 10, 25):
        s = np.array([y[k : k + m].sum() for k in range(y.size - m + 1)])
        ref = np.sum((s[m:] - s[:-m]) ** 2)
        assert kernels.allan_sum(y, m) == pytest.approx(ref, rel=1e-12)


def test_backend_switching(monkeypatch):
    assert _backend.get_backend() in ("numba", "numpy")
    with _backend.use_backend("numpy"):
        assert _backend.get_backend() == "numpy"
        with _backend.use_backend("numba"):
            assert _backend.get_backend() == "numba"
        assert _backend.get_backend() == "numpy"
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")
    monkeypatch.setenv("NVMAG_BACKEND", "numpy")
    assert _backend._initial_backend() == "numpy"
    monkeypatch.setenv("NVMAG_BACKEND", "bogus")
    assert _backend._initial_backend() == "numba"


def test_synthesis_backends_agree():
    from nvmag.trace_synth import ServoSpec, preset_synth_spec, synthesize

    spec = preset_synth_spec(duration=2.0, seed=3, servo=ServoSpec())
    with _backend.use_backend("numba"):
        a = synthesize(spec).samples
    with _backend.use_backend("numpy"):
        b = synthesize(spec).samples
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9 * np.std(a))

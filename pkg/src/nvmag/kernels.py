"""Hot inner loops, each with a numba and a numpy/scipy implementation.

Public entry points dispatch on :func:`nvmag._backend.get_backend`. The
``*_numba`` and ``*_numpy`` variants are importable directly so tests and
benchmarks can compare them.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from ._backend import get_backend, njit

# ---------------------------------------------------------------------------
# cascade of identical single-pole low-pass sections
#   s_k[n] = a * s_k[n-1] + (1 - a) * s_{k-1}[n],   s_0[n] = x[n]
# ``state`` holds the last output of every section and is updated in place.


@njit
def _onepole_cascade_loop(x, a, state):
    n = x.shape[0]
    order = state.shape[0]
    y = np.empty(n)
    b = 1.0 - a
    for i in range(n):
        v = x[i]
        for k in range(order):
            v = a * state[k] + b * v
            state[k] = v
        y[i] = v
    return y


def onepole_cascade_numba(x: np.ndarray, a: float, state: np.ndarray) -> np.ndarray:
    return _onepole_cascade_loop(np.ascontiguousarray(x, dtype=np.float64), float(a), state)


def onepole_cascade_numpy(x: np.ndarray, a: float, state: np.ndarray) -> np.ndarray:
    y = np.asarray(x, dtype=np.float64)
    num = np.array([1.0 - a])
    den = np.array([1.0, -a])
    for k in range(state.shape[0]):
        y, _ = signal.lfilter(num, den, y, zi=np.array([a * state[k]]))
        if y.size:
            state[k] = y[-1]
    return y


def onepole_cascade(x: np.ndarray, a: float, state: np.ndarray) -> np.ndarray:
    if get_backend() == "numba":
        return onepole_cascade_numba(x, a, state)
    return onepole_cascade_numpy(x, a, state)


# ---------------------------------------------------------------------------
# integral servo acting on a low-pass-filtered error signal
#   e[n]   = x[n] - u[n]
#   l[n]   = (1 - alpha) * l[n-1] + alpha * e[n]
#   u[n+1] = u[n] + gain * l[n]
# Zero initial state. Returns the residual error e.


@njit
def _servo_loop(x, alpha, gain):
    n = x.shape[0]
    e = np.empty(n)
    lp = 0.0
    u = 0.0
    beta = 1.0 - alpha
    for i in range(n):
        err = x[i] - u
        e[i] = err
        lp = beta * lp + alpha * err
        u += gain * lp
    return e


def servo_numba(x: np.ndarray, alpha: float, gain: float) -> np.ndarray:
    return _servo_loop(np.ascontiguousarray(x, dtype=np.float64), float(alpha), float(gain))


def servo_transfer_coefficients(alpha: float, gain: float) -> tuple[np.ndarray, np.ndarray]:
    """(b, a) of the closed-loop map from input to residual error."""
    beta = 1.0 - alpha
    b = np.array([1.0, -(1.0 + beta), beta])
    a = b + np.array([0.0, gain * alpha, 0.0])
    return b, a


def servo_numpy(x: np.ndarray, alpha: float, gain: float) -> np.ndarray:
    b, a = servo_transfer_coefficients(alpha, gain)
    return signal.lfilter(b, a, np.asarray(x, dtype=np.float64))


def servo(x: np.ndarray, alpha: float, gain: float) -> np.ndarray:
    if get_backend() == "numba":
        return servo_numba(x, alpha, gain)
    return servo_numpy(x, alpha, gain)


# ---------------------------------------------------------------------------
# overlapping Allan variance sum for averaging factor m:
#   sum_{k=0}^{N-2m} (S_{k+m} - S_k)^2,  S_k = sum_{i=k}^{k+m-1} y_i
# Callers divide by 2 m^2 (N - 2m + 1).


@njit
def _allan_sum_loop(y, m):
    n = y.shape[0]
    count = n - 2 * m + 1
    d = 0.0
    for i in range(m):
        d += y[i + m] - y[i]
    total = d * d
    for k in range(1, count):
        d += y[k + 2 * m - 1] - 2.0 * y[k + m - 1] + y[k - 1]
        total += d * d
    return total


def allan_sum_numba(y: np.ndarray, m: int) -> float:
    return float(_allan_sum_loop(np.ascontiguousarray(y, dtype=np.float64), int(m)))


def allan_sum_numpy(y: np.ndarray, m: int) -> float:
    c = np.concatenate(([0.0], np.cumsum(np.asarray(y, dtype=np.float64))))
    d = c[2 * m :] - 2.0 * c[m : c.size - m] + c[: c.size - 2 * m]
    return float(np.dot(d, d))


def allan_sum(y: np.ndarray, m: int) -> float:
    if get_backend() == "numba":
        return allan_sum_numba(y, m)
    return allan_sum_numpy(y, m)

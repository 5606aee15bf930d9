"""Photocurrent noise decomposition and conversion to magnetic-field noise.

The far-detuned noise floor of the demodulated photocurrent is modeled as

    n(I) = sqrt(n_elec**2 + p1 * I + p2 * I**2)

with an electrical floor, a shot-noise term linear in the fluorescence
photocurrent ``I`` and a laser-intensity term quadratic in ``I``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import FitFailureError, FitWarning, InvalidArgumentError, SingularParameterError
from .fitting import nlls_fit
from .model_odmr import GAMMA_E

ELEMENTARY_CHARGE = 1.6e-19  # C, value used for the shot-noise coefficients


@dataclass(frozen=True)
class NoiseBudget:
    n_elec: float  # A/sqrt(Hz)
    p1: float  # A/Hz
    p2: float  # 1/Hz
    covariance: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __post_init__(self):
        for name in ("n_elec", "p1", "p2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvalidArgumentError(f"{name} must be finite and nonnegative, got {v}")
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2):
            raise InvalidArgumentError("covariance must be 2x2 over (p1, p2)")
        if np.all(np.isfinite(cov)):
            if not np.allclose(cov, cov.T, rtol=1e-9, atol=0):
                raise InvalidArgumentError("covariance must be symmetric")
            if np.min(np.linalg.eigvalsh(cov)) < -1e-12 * max(np.max(np.abs(cov)), 1e-300):
                raise InvalidArgumentError("covariance must be positive semidefinite")
        object.__setattr__(self, "covariance", cov)

    @property
    def p1_std(self) -> float:
        return math.sqrt(self.covariance[0, 0])

    @property
    def p2_std(self) -> float:
        return math.sqrt(self.covariance[1, 1])


DEFAULT_BUDGET = NoiseBudget(
    n_elec=20e-12,
    p1=5.0e-19,
    p2=5.0e-17,
    covariance=np.diag([0.6e-19**2, 0.5e-17**2]),
)


@dataclass(frozen=True)
class NoiseDatum:
    i_fl: float
    n_far: float
    rel_uncertainty: float = 0.05

    def __post_init__(self):
        if not (math.isfinite(self.i_fl) and self.i_fl >= 0):
            raise InvalidArgumentError("i_fl must be finite and nonnegative")
        if not (math.isfinite(self.n_far) and self.n_far > 0):
            raise InvalidArgumentError("n_far must be finite and positive")
        if not self.rel_uncertainty > 0:
            raise InvalidArgumentError("rel_uncertainty must be positive")


def shot_noise_density(i_fl, balanced: bool = True, q_e: float = ELEMENTARY_CHARGE):
    """Single-sided shot-noise amplitude density in A/sqrt(Hz).

    Balanced detection adds the independent shot noise of the reference
    photodiode, doubling the power.
    """
    i_fl = np.asarray(i_fl, dtype=float)
    if np.any(i_fl < 0) or not np.all(np.isfinite(i_fl)):
        raise InvalidArgumentError("photocurrent must be finite and nonnegative")
    n_det = 2 if balanced else 1
    out = np.sqrt(n_det * 2.0 * q_e * i_fl)
    return float(out) if out.ndim == 0 else out


def noise_model_eval(i_fl, budget: NoiseBudget):
    i_fl = np.asarray(i_fl, dtype=float)
    if not np.all(np.isfinite(i_fl)):
        raise InvalidArgumentError("photocurrent must be finite")
    out = np.sqrt(budget.n_elec**2 + budget.p1 * i_fl + budget.p2 * i_fl**2)
    return float(out) if out.ndim == 0 else out


def noise_components(i_fl: float, budget: NoiseBudget) -> dict[str, float]:
    """Electrical, shot and intensity amplitude densities at ``i_fl``."""
    return {
        "electrical": budget.n_elec,
        "shot": math.sqrt(budget.p1 * i_fl),
        "intensity": math.sqrt(budget.p2) * i_fl,
    }


def _noise_model(i, p, n_elec):
    return np.sqrt(n_elec**2 + p[0] * i + p[1] * i**2)


def fit_noise_model(
    data: Sequence[NoiseDatum],
    n_elec: float,
    fit_n_elec: bool = False,
    absolute_sigma: bool = True,
) -> NoiseBudget:
    """Weighted least-squares fit of ``(p1, p2)`` to measured noise floors.

    Each datum carries a relative standard uncertainty; residuals are
    weighted by ``1 / (rel_uncertainty * n_far)``. With ``absolute_sigma``
    those uncertainties are taken at face value for the covariance. With
    ``fit_n_elec`` the electrical floor is fitted as well (starting from
    ``n_elec``); the returned covariance still covers ``(p1, p2)`` only.

    Two data points determine the parameters exactly; the covariance is then
    filled with NaN and a :class:`FitWarning` is issued.
    """
    i = np.array([d.i_fl for d in data], dtype=float)
    n = np.array([d.n_far for d in data], dtype=float)
    sigma = np.array([d.rel_uncertainty for d in data]) * n
    n_par = 3 if fit_n_elec else 2
    if i.size < n_par or np.unique(i).size < n_par:
        raise FitFailureError(f"need at least {n_par} distinct photocurrents, got {np.unique(i).size}")

    # Linear start: n^2 - n_elec^2 = p1 I + p2 I^2, weighted by 1/sigma(n^2).
    a = np.column_stack([i, i**2]) / (2 * n * sigma)[:, None]
    b = (n**2 - n_elec**2) / (2 * n * sigma)
    if np.linalg.matrix_rank(a) < 2:
        raise FitFailureError("degenerate design: photocurrents do not separate p1 and p2")
    p_lin, *_ = np.linalg.lstsq(a, b, rcond=None)
    p_lin = np.maximum(p_lin, 0.0)
    scale = np.array([1e-19, 1e-17])
    n_scale = 1e-11
    p0 = np.where(p_lin > 0, p_lin, scale) / scale

    if fit_n_elec:
        model = lambda x, p: np.sqrt((p[2] * n_scale) ** 2 + p[0] * scale[0] * x + p[1] * scale[1] * x**2)  # noqa: E731
        p0 = np.append(p0, n_elec / n_scale)
    else:
        model = lambda x, p: _noise_model(x, p * scale, n_elec)  # noqa: E731

    exact = i.size == n_par
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FitWarning)
        result = nlls_fit(model, i, n, p0, weights=1.0 / sigma, absolute_sigma=absolute_sigma and not exact)
    p1, p2 = result.params[:2] * scale
    cov = result.covariance[:2, :2] * np.outer(scale, scale)
    if exact:
        warnings.warn("noise model exactly determined; covariance undefined", FitWarning, stacklevel=2)
        cov = np.full((2, 2), np.nan)
    n_fit = abs(result.params[2]) * n_scale if fit_n_elec else n_elec
    return NoiseBudget(n_elec=float(n_fit), p1=max(float(p1), 0.0), p2=max(float(p2), 0.0), covariance=cov)


class EquivalentCurrent(NamedTuple):
    value: float
    std: float


def equivalent_photocurrent(budget: NoiseBudget) -> EquivalentCurrent:
    """Photocurrent ``p1 / p2`` at which shot and intensity noise are equal.

    The uncertainty is first-order propagation of the (p1, p2) covariance.
    """
    if budget.p2 == 0:
        raise SingularParameterError("p2 is zero; shot noise always dominates")
    ratio = budget.p1 / budget.p2
    grad = np.array([1.0 / budget.p2, -budget.p1 / budget.p2**2])
    var = float(grad @ budget.covariance @ grad)
    return EquivalentCurrent(ratio, math.sqrt(var) if var >= 0 else math.nan)


def reduction_rate(sigma_on: float, psn_on: float, sigma_off: float, psn_off: float) -> float:
    """Suppression of intensity noise by balanced detection.

    Ratio of the shot-noise-corrected standard deviations with and without
    the reference beam.
    """
    if min(psn_on, psn_off) < 0:
        raise InvalidArgumentError("shot-noise values must be nonnegative")
    if not (sigma_on > psn_on and sigma_off > psn_off):
        raise InvalidArgumentError("total noise must exceed the shot noise")
    return math.sqrt((sigma_on**2 - psn_on**2) / (sigma_off**2 - psn_off**2))


def relative_intensity_noise(sigma: float, current: float, bandwidth: float) -> float:
    """RIN in dBc/Hz, ``10 log10(sigma^2 / (bandwidth * current^2))``."""
    if not (sigma > 0 and current > 0 and bandwidth > 0):
        raise InvalidArgumentError("sigma, current and bandwidth must be positive")
    return 10.0 * math.log10(sigma**2 / (bandwidth * current**2))


def field_noise_floor(n_current, slope: float, gamma_e: float = GAMMA_E):
    """Magnetic-field noise density, T/sqrt(Hz)."""
    if slope == 0 or gamma_e == 0:
        raise SingularParameterError("zero slope or gyromagnetic ratio")
    out = np.asarray(n_current, dtype=float) / abs(gamma_e * slope)
    return float(out) if out.ndim == 0 else out


def synthetic_noise_data(
    budget: NoiseBudget,
    currents: Sequence[float],
    rel_noise: float = 0.0,
    rng: np.random.Generator | None = None,
    rel_uncertainty: float = 0.05,
) -> list[NoiseDatum]:
    """Noise floors predicted by ``budget`` with optional multiplicative Gaussian scatter."""
    n = noise_model_eval(np.asarray(currents, dtype=float), budget)
    if rel_noise:
        rng = rng if rng is not None else np.random.default_rng()
        n = n * (1.0 + rel_noise * rng.standard_normal(n.shape))
    return [NoiseDatum(float(i), float(v), rel_uncertainty) for i, v in zip(currents, n)]

"""Damped Gauss-Newton (Levenberg-Marquardt) least squares and the ODMR fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import FitFailureError, FitWarning, InvalidArgumentError
from .model_odmr import (
    HYPERFINE_SPLITTING,
    N_PEAKS,
    DerivLorentzianPeak,
    OdmrSpectrum,
    deriv_lorentzian_jacobian,
    hyperfine_centers,
    spectrum_slope,
)

_ROUNDOFF = 1e-13  # relative residual treated as an exact fit

Model = Callable[[np.ndarray, np.ndarray], np.ndarray]
Jacobian = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class FitResult:
    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    n_iterations: int
    converged: bool
    message: str = ""
    dof: int = 0
    history: list[float] = field(default_factory=list)

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def numeric_jacobian(model: Model, x: np.ndarray, p: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``model(x, p)`` with respect to ``p``."""
    p = np.asarray(p, dtype=float)
    cols = []
    for j in range(p.size):
        h = rel_step * max(abs(p[j]), 1e-12)
        up = p.copy()
        dn = p.copy()
        up[j] += h
        dn[j] -= h
        cols.append((model(x, up) - model(x, dn)) / (2.0 * h))
    return np.column_stack(cols)


def _solve_normal(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Cholesky is enough for the damped, positive definite systems here.
    try:
        c = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise FitFailureError(f"normal matrix not positive definite: {exc}") from None
    z = np.linalg.solve(c, b)
    return np.linalg.solve(c.T, z)


def nlls_fit(
    model: Model,
    x,
    y,
    p0,
    weights=None,
    jac: Jacobian | None = None,
    *,
    max_iter: int = 200,
    ftol: float = 1e-10,
    gtol: float = 1e-12,
    lambda0: float = 1e-3,
    lambda_up: float = 10.0,
    lambda_down: float = 0.1,
    absolute_sigma: bool = False,
) -> FitResult:
    """Minimise ``sum((weights * (y - model(x, p)))**2)`` from ``p0``.

    ``weights`` are inverse standard deviations. Damping is Marquardt-scaled
    (``lambda * diag(J^T J)``). Convergence is declared when the relative
    change in the residual sum of squares of an accepted step drops below
    ``ftol``, or the scaled gradient (largest cosine between the residual and
    a Jacobian column) drops below ``gtol``.

    The covariance is the inverse Gauss-Newton normal matrix, scaled by the
    reduced chi-square unless ``absolute_sigma`` is set.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.array(p0, dtype=float)
    if not np.all(np.isfinite(p)):
        raise InvalidArgumentError("initial parameters must be finite")
    w = np.ones_like(y) if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), y.shape)
    if y.size < p.size:
        raise InvalidArgumentError(f"{y.size} data points cannot determine {p.size} parameters")

    def jacobian(pp):
        j = jac(x, pp) if jac is not None else numeric_jacobian(model, x, pp)
        return w[:, None] * np.asarray(j, dtype=float)

    r = w * (y - model(x, p))
    ynorm = float(np.linalg.norm(w * y))
    cost = float(r @ r)
    history = [math.sqrt(cost)]
    lam = lambda0
    converged = False
    message = "iteration cap reached"
    it = 0
    J = jacobian(p)
    while it < max_iter:
        it += 1
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        if np.any(diag <= 0):
            bad = np.flatnonzero(diag <= 0).tolist()
            raise FitFailureError(f"singular normal matrix: parameters {bad} do not affect the model")
        col_norm = np.sqrt(diag)
        rnorm = math.sqrt(cost)
        if rnorm <= _ROUNDOFF * ynorm:
            converged = True
            message = "residual at round-off level"
            it -= 1
            break
        if np.max(np.abs(g) / (col_norm * rnorm)) < gtol:
            converged = True
            message = "gradient below tolerance"
            it -= 1
            break
        accepted = False
        while lam < 1e16:
            step = _solve_normal(JtJ + lam * np.diag(diag), g)
            p_new = p + step
            r_new = w * (y - model(x, p_new))
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= lambda_up
        if not accepted:
            message = "no downhill step found"
            converged = True
            break
        rel_change = (cost - cost_new) / cost if cost > 0 else 0.0
        p, r, cost = p_new, r_new, cost_new
        history.append(math.sqrt(cost))
        lam = max(lam * lambda_down, 1e-15)
        J = jacobian(p)
        if cost == 0.0 or rel_change < ftol:
            converged = True
            message = "relative residual change below tolerance"
            break

    JtJ = J.T @ J
    dof = y.size - p.size
    # judge singularity on the column-scaled matrix so parameter units do not matter
    d = np.sqrt(np.diag(JtJ))
    if np.any(d == 0):
        raise FitFailureError("singular normal matrix at solution: a parameter does not affect the model")
    scaled = JtJ / np.outer(d, d)
    cond = np.linalg.cond(scaled)
    if not np.isfinite(cond) or cond > 1e15:
        raise FitFailureError(f"singular normal matrix at solution (scaled condition number {cond:.3g})")
    cov = np.linalg.inv(scaled) / np.outer(d, d)
    cov = 0.5 * (cov + cov.T)
    if not absolute_sigma:
        if dof > 0:
            cov = cov * (cost / dof)
        else:
            cov = np.full_like(cov, np.nan)
    if not converged:
        warnings.warn(f"fit did not converge after {it} iterations", FitWarning, stacklevel=2)
    return FitResult(
        params=p,
        covariance=cov,
        residual_norm=math.sqrt(cost),
        n_iterations=it,
        converged=converged,
        message=message,
        dof=dof,
        history=history,
    )


# ---------------------------------------------------------------------------
# five-peak ODMR spectrum


class _OdmrLayout:
    """Maps a flat parameter vector onto five peaks.

    Vector order: 5 amplitudes, then 1 (shared) or 5 widths, then 5 centers
    when the centers float.
    """

    def __init__(self, centers: np.ndarray, shared_width: bool, constrain_centers: bool):
        self.grid = np.asarray(centers, dtype=float)
        self.shared_width = shared_width
        self.constrain_centers = constrain_centers
        self.n_width = 1 if shared_width else N_PEAKS
        self.size = N_PEAKS + self.n_width + (0 if constrain_centers else N_PEAKS)

    def unpack(self, p):
        amps = p[:N_PEAKS]
        widths = p[N_PEAKS : N_PEAKS + self.n_width]
        widths = np.repeat(widths, N_PEAKS) if self.shared_width else widths
        centers = self.grid if self.constrain_centers else p[N_PEAKS + self.n_width :]
        return amps, widths, centers

    def pack(self, amps, widths, centers):
        parts = [np.asarray(amps, float)]
        parts.append(np.atleast_1d(np.mean(widths)) if self.shared_width else np.asarray(widths, float))
        if not self.constrain_centers:
            parts.append(np.asarray(centers, float))
        return np.concatenate(parts)

    def peaks(self, p) -> tuple[DerivLorentzianPeak, ...]:
        amps, widths, centers = self.unpack(p)
        return tuple(DerivLorentzianPeak(float(a), float(g), float(c)) for a, g, c in zip(amps, widths, centers))

    def model(self, x, p):
        amps, widths, centers = self.unpack(p)
        h2 = 0.25 * widths**2
        total = np.zeros_like(x)
        for a, hh, c in zip(amps, h2, centers):
            d = x - c
            q = d * d + hh
            total += -2.0 * a * hh * d / (q * q)
        return total

    def jacobian(self, x, p):
        amps, widths, centers = self.unpack(p)
        J = np.zeros((x.size, self.size))
        for i in range(N_PEAKS):
            if not widths[i] > 0:
                raise FitFailureError("peak width became nonpositive")
            cols = deriv_lorentzian_jacobian(x, DerivLorentzianPeak(amps[i], widths[i], centers[i]))
            J[:, i] = cols[:, 0]
            J[:, N_PEAKS + (0 if self.shared_width else i)] += cols[:, 1]
            if not self.constrain_centers:
                J[:, N_PEAKS + self.n_width + i] = cols[:, 2]
        return J


def initial_peaks(spectrum: OdmrSpectrum, centers: np.ndarray) -> tuple[np.ndarray, float]:
    """Amplitudes and a shared width estimated from the central lobe.

    The width comes from the spacing of the central extrema (``fwhm / sqrt(3)``
    apart); each amplitude from the lobe heights at that offset.
    """
    d = spectrum.detunings
    y = spectrum.demod_current
    spacing = centers[1] - centers[0] if centers.size > 1 else np.ptp(d)
    near = np.abs(d - centers[N_PEAKS // 2]) <= 0.5 * spacing
    if np.count_nonzero(near) < 3:
        raise InvalidArgumentError("too few points near the central resonance to initialise the fit")
    dn, yn = d[near], y[near]
    sep = abs(dn[np.argmax(yn)] - dn[np.argmin(yn)])
    fwhm = math.sqrt(3.0) * sep if sep > 0 else 0.2 * spacing
    off = fwhm / (2.0 * math.sqrt(3.0))
    amps = []
    for c in centers:
        lobe = 0.5 * (np.interp(c - off, d, y) - np.interp(c + off, d, y))
        amps.append(lobe * 4.0 * math.sqrt(3.0) * fwhm / 9.0)
    return np.array(amps), fwhm


def fit_odmr_spectrum(
    spectrum: OdmrSpectrum,
    a_hf: float = HYPERFINE_SPLITTING,
    constrain_centers: bool = True,
    shared_width: bool = True,
    weights=None,
    **options,
) -> tuple[OdmrSpectrum, FitResult]:
    """Fit five derivative Lorentzians on the hyperfine grid.

    With ``constrain_centers`` the centers are pinned to ``hyperfine_centers(a_hf)``;
    otherwise they start there and float.
    """
    d = spectrum.detunings
    if d.size == 0 or d[0] > -2.0 * a_hf or d[-1] < 2.0 * a_hf:
        raise InvalidArgumentError("spectrum must span at least +-2 hyperfine splittings")
    grid = hyperfine_centers(a_hf)
    layout = _OdmrLayout(grid, shared_width, constrain_centers)
    amps, fwhm = initial_peaks(spectrum, grid)
    p0 = layout.pack(amps, np.full(N_PEAKS, fwhm), grid)
    result = nlls_fit(layout.model, d, spectrum.demod_current, p0, weights=weights, jac=layout.jacobian, **options)
    peaks = layout.peaks(result.params)
    order = np.argsort([pk.center for pk in peaks])
    peaks = tuple(peaks[i] for i in order)
    return OdmrSpectrum(d, spectrum.demod_current, peaks), result


def central_slope(spectrum: OdmrSpectrum) -> float:
    """Slope of the fitted model at the central peak's center."""
    if spectrum.peaks is None:
        raise InvalidArgumentError("spectrum has no fitted peaks")
    c = spectrum.peaks[N_PEAKS // 2].center
    return float(spectrum_slope(c, spectrum.peaks))


class ZeroCrossingFit(NamedTuple):
    slope: float
    std_error: float
    intercept: float
    n_points: int


DEFAULT_WINDOW_FRACTION = 1.0 / 20.0


def fit_zero_crossing(spectrum: OdmrSpectrum, window: float | None = None, weights=None) -> ZeroCrossingFit:
    """Straight-line fit to the near-resonant points ``|detuning| <= window``.

    Without ``window`` the fitted central width times ``DEFAULT_WINDOW_FRACTION``
    is used; at that half-width the cubic term of the line shape biases the
    regression slope by about 1 %.
    """
    if window is None:
        if spectrum.peaks is None:
            raise InvalidArgumentError("window is required when the spectrum has no fitted peaks")
        window = spectrum.peaks[N_PEAKS // 2].fwhm * DEFAULT_WINDOW_FRACTION
    sel = np.abs(spectrum.detunings) <= window
    n = int(np.count_nonzero(sel))
    if n < 3:
        raise InvalidArgumentError(f"need at least 3 points within +-{window:g} Hz, found {n}")
    x = spectrum.detunings[sel]
    y = spectrum.demod_current[sel]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)[sel] ** 2
    sw = w.sum()
    xm = (w @ x) / sw
    ym = (w @ y) / sw
    sxx = w @ (x - xm) ** 2
    slope = (w @ ((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    s2 = (w @ resid**2) / (n - 2)
    return ZeroCrossingFit(float(slope), float(math.sqrt(s2 / sxx)), float(intercept), n)


def synthetic_spectrum(
    peaks: Sequence[DerivLorentzianPeak],
    span: float = 6.0e6,
    n_points: int = 601,
    noise: float = 0.0,
    seed: int = 0,
) -> OdmrSpectrum:
    """Evaluate ``peaks`` on a uniform detuning grid, adding Gaussian noise.

    ``noise`` is relative to the largest absolute model value.
    """
    from .model_odmr import spectrum_model

    d = np.linspace(-span, span, n_points)
    y = spectrum_model(d, peaks)
    if noise:
        rng = np.random.default_rng(seed)
        y = y + noise * np.max(np.abs(y)) * rng.standard_normal(d.size)
    return OdmrSpectrum(d, y)

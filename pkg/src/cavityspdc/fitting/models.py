"""
Model fitters built on :func:`least_squares`.

Every fitter works on internally rescaled data (abscissa shifted and divided
by its span, parameters divided by their initial guesses) so that the
physical estimates do not depend on the input units.
"""

from __future__ import annotations

import numpy as np
from scipy.constants import c

from ..biphoton import (
    BiphotonModel,
    DetectorResponse,
    bin_integrals,
    convolve_g2,
    fwhm,
    g2_curve,
)
from ..errors import DomainError
from .solver import FitProblem, FitResult, UnderdeterminedFit, least_squares


# -- Lorentzian cavity scans -------------------------------------------------


def lorentz_peak(x, center, width, amplitude, offset):
    """Lorentzian with peak height ``amplitude`` on top of ``offset``."""
    u = (x - center) / (0.5 * width)
    return offset + amplitude / (1 + u * u)


def lorentz_jacobian(x, center, width, amplitude, offset):
    u = (x - center) / (0.5 * width)
    q = 1 / (1 + u * u)
    dq_du = -2 * u * q * q
    return np.column_stack(
        [
            amplitude * dq_du * (-2 / width),
            amplitude * dq_du * (-u / width),
            q,
            np.ones_like(x),
        ]
    )


def lorentz_guess(x, y):
    """Offset from the lower decile, centre at the maximum, width from the
    area-to-height ratio (a Lorentzian has area ``pi * h * w / 2``)."""
    offset = float(np.percentile(y, 10))
    k = int(np.argmax(y))
    height = float(y[k] - offset)
    area = np.trapezoid(np.clip(y - offset, 0, None), x)
    width = 2 * area / (np.pi * height) if height > 0 else np.ptp(x) / 10
    width = float(np.clip(width, 3 * np.min(np.diff(x)), np.ptp(x) / 3))
    return float(x[k]), width, height, offset


def fit_lorentzian_scan(freq, trans, init=None, weights=None) -> FitResult:
    """Fit ``offset + amplitude / (1 + ((nu - nu0) / (fwhm/2))^2)``.

    ``init`` is an optional ``(center, fwhm, amplitude, offset)`` guess in the
    input units. Returns parameters ``center``, ``fwhm``, ``amplitude``,
    ``offset``.
    """
    freq = np.asarray(freq, dtype=float)
    trans = np.asarray(trans, dtype=float)
    names = ["center", "fwhm", "amplitude", "offset"]
    if np.ptp(trans) == 0:
        return FitResult(names, np.full(4, np.nan), np.full(4, np.nan), 0.0, 0, False, "degenerate data")
    ref, span = 0.5 * (freq.min() + freq.max()), np.ptp(freq)
    x = (freq - ref) / span
    yscale = np.max(np.abs(trans))
    y = trans / yscale
    if init is None:
        p0 = np.array(lorentz_guess(x, y))
    else:
        cen, w, a, o = init
        p0 = np.array([(cen - ref) / span, w / span, a / yscale, o / yscale])
    if np.ptp(x) < 3 * p0[1]:
        raise DomainError("scan must span at least three times the initial FWHM guess")
    wts = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    lower = np.array([x.min(), 1e-12, -np.inf, -np.inf])
    upper = np.array([x.max(), np.inf, np.inf, np.inf])
    p0 = np.clip(p0, lower, upper)
    prob = FitProblem(
        residual=lambda p: wts * (lorentz_peak(x, *p) - y),
        jacobian=lambda p: wts[:, None] * lorentz_jacobian(x, *p),
        x0=p0,
        lower=lower,
        upper=upper,
        names=names,
    )
    res = least_squares(prob)
    scale = np.array([span, span, yscale, yscale])
    shift = np.array([ref, 0.0, 0.0, 0.0])
    res.x = res.x * scale + shift
    res.stderr = res.stderr * scale
    if res.covariance is not None:
        res.covariance = res.covariance * np.outer(scale, scale)
    res.cost = res.cost * yscale**2
    return res


# -- fringes ------------------------------------------------------------------


def fringe(phi, amplitude, visibility, offset, background=0.0):
    return background + amplitude * (1 + visibility * np.cos(phi + offset)) / 2


def fringe_jacobian(phi, amplitude, visibility, offset):
    cs = np.cos(phi + offset)
    return np.column_stack(
        [
            (1 + visibility * cs) / 2,
            amplitude * cs / 2,
            -amplitude * visibility * np.sin(phi + offset) / 2,
        ]
    )


def fringe_guess(phi, counts, background=0.0):
    """Project onto the first harmonic ``a0 + a1 cos(phi) + b1 sin(phi)``."""
    X = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    a0, a1, b1 = np.linalg.lstsq(X, counts - background, rcond=None)[0]
    amplitude = 2 * a0
    mod = np.hypot(a1, b1)
    vis = mod / a0 if a0 > 0 else 0.0
    return float(amplitude), float(np.clip(vis, 0, 1)), float(np.arctan2(-b1, a1))


def fit_fringe(phase, counts, background=0.0, poisson=False, init=None) -> FitResult:
    """Fit ``background + amplitude (1 + V cos(phi + offset)) / 2``.

    The background (accidental level) is held fixed: it is not separable from
    amplitude and visibility using one harmonic. Setting it to the measured
    accidentals gives the net visibility; zero gives the raw one.
    """
    phi = np.asarray(phase, dtype=float)
    y = np.asarray(counts, dtype=float)
    if np.ptp(phi) < 2 * np.pi * (1 - 1.0 / max(phi.size, 1)):
        raise DomainError("fringe data must span at least one period")
    yscale = float(np.max(np.abs(y))) or 1.0
    bg = background / yscale
    yn = y / yscale
    a, v, off = fringe_guess(phi, yn, bg) if init is None else (init[0] / yscale, init[1], init[2])
    w = 1 / np.sqrt(np.maximum(y, 1.0)) * np.sqrt(yscale) if poisson else np.ones_like(y)
    lower = np.array([0.0, 0.0, off - 2 * np.pi])
    upper = np.array([np.inf, 1.0, off + 2 * np.pi])
    prob = FitProblem(
        residual=lambda p: w * (fringe(phi, *p, bg) - yn),
        jacobian=lambda p: w[:, None] * fringe_jacobian(phi, *p),
        x0=np.clip([max(a, 1e-12), v, off], lower, upper),
        lower=lower,
        upper=upper,
        names=["amplitude", "visibility", "offset"],
    )
    res = least_squares(prob)
    scale = np.array([yscale, 1.0, 1.0])
    res.x = res.x * scale
    res.x[2] = (res.x[2] + np.pi) % (2 * np.pi) - np.pi
    res.stderr = res.stderr * scale
    res.cost *= yscale**2
    res.extra = {"background": float(background)}
    return res


# -- Michelson visibility decay ------------------------------------------------


def visibility_decay(L, linewidth, background):
    return np.exp(-np.pi * np.abs(linewidth * L / c)) / (1 + background / 2)


def fit_visibility_decay(path_difference, visibility, reference_linewidth=None) -> FitResult:
    """Recover the spectral FWHM and background ratio R from V(L).

    Needs at least four points whose visibilities span a factor of two. The
    start point comes from a straight-line fit of ``log V`` against ``|L|``.
    With ``reference_linewidth`` the relative deviation of the fitted linewidth
    from it is added to the result.
    """
    L = np.abs(np.asarray(path_difference, dtype=float))
    V = np.asarray(visibility, dtype=float)
    if L.size < 4:
        raise UnderdeterminedFit(f"need at least 4 (L, visibility) points, got {L.size}")
    if np.any(V <= 0):
        raise DomainError("visibilities must be positive")
    if V.max() < 2 * V.min():
        raise DomainError("visibilities must span at least a factor of two")
    lscale = float(L.max())
    x = L / lscale
    slope, icpt = np.polyfit(x, np.log(V), 1)
    k0 = max(-slope, 1e-6)  # pi * linewidth * lscale / c
    r0 = max(2 * (np.exp(-icpt) - 1), 0.0)
    prob = FitProblem(
        residual=lambda p: np.exp(-k0 * p[0] * x) / (1 + p[1] / 2) - V,
        x0=[1.0, r0],
        lower=[1e-9, 0.0],
        upper=[np.inf, np.inf],
        names=["linewidth", "background"],
    )
    res = least_squares(prob)
    to_hz = k0 * c / (np.pi * lscale)
    scale = np.array([to_hz, 1.0])
    res.x = res.x * scale
    res.stderr = res.stderr * scale
    if reference_linewidth:
        res.extra = {
            "reference_linewidth_hz": float(reference_linewidth),
            "relative_deviation": float((res.x[0] - reference_linewidth) / reference_linewidth),
        }
    return res


# -- G2 histogram ---------------------------------------------------------------


def g2_histogram_model(edges, gamma_s, gamma_i, gamma_det, amplitude, background, prior: BiphotonModel,
                       step=0.5e-12, margin=2e-9):
    """Expected counts per bin: amplitude * (peak-normalised detected curve
    averaged over the bin) + background."""
    span = max(abs(edges[0]), abs(edges[-1])) + margin
    model = BiphotonModel(gamma_s, gamma_i, prior.fsr_s, prior.fsr_i, prior.center_s, prior.center_i,
                          prior.tau0, 0)
    curve = convolve_g2(g2_curve(model, span, step), DetectorResponse(gamma_det))
    width = np.diff(edges)
    return amplitude * bin_integrals(curve.tau, curve.values, edges) / width + background


def fit_g2_histogram(edges, counts, prior: BiphotonModel, gamma_det, poisson=False, fixed=()) -> FitResult:
    """Fit the single-mode detected correlation to a coincidence histogram.

    Free parameters are ``gamma_s``, ``gamma_i``, ``gamma_det``, ``amplitude``
    and ``background``; names listed in ``fixed`` stay at their start values.
    Start values come from ``prior`` and ``gamma_det``; amplitude and
    background from the histogram maximum and its outer decile.
    """
    edges = np.asarray(edges, dtype=float)
    y = np.asarray(counts, dtype=float)
    names = ["gamma_s", "gamma_i", "gamma_det", "amplitude", "background"]
    bg0 = float(np.percentile(y, 10))
    start = np.array([prior.gamma_s, prior.gamma_i, gamma_det, max(y.max() - bg0, 1.0), max(bg0, 0.0)])
    scale = np.where(start > 0, start, 1.0)
    scale[4] = max(start[3] * 1e-3, start[4], 1.0)
    free = [k for k, n in enumerate(names) if n not in fixed]
    yscale = max(y.max(), 1.0)
    w = 1 / np.sqrt(np.maximum(y, 1.0)) if poisson else np.full(y.shape, 1 / yscale)

    def full(p):
        q = start.copy()
        q[free] = p * scale[free]
        return q

    def resid(p):
        q = full(p)
        return w * (g2_histogram_model(edges, *q, prior) - y)

    x0 = start[free] / scale[free]
    lower = np.array([1e-3, 1e-3, 1e-3, 0.0, 0.0])[free]
    prob = FitProblem(resid, x0, lower=lower, names=[names[k] for k in free], xtol=1e-10, ftol=1e-12)
    res = least_squares(prob)
    res.x = res.x * scale[free]
    res.stderr = res.stderr * scale[free]
    if fixed:
        x = start.copy()
        x[free] = res.x
        err = np.zeros(5)
        err[free] = res.stderr
        res.names, res.x, res.stderr = names, x, err
    return res


# -- detector constant ------------------------------------------------------------


def fit_detector_rate(model: BiphotonModel, target_fwhm: float, gamma_det0: float = 3e10,
                      span=3e-9, step=0.5e-12) -> FitResult:
    """Detector damping rate that broadens ``model``'s curve to ``target_fwhm``."""
    base = g2_curve(model, span, step)
    intrinsic = fwhm(base)
    if target_fwhm <= intrinsic:
        raise DomainError(
            f"target FWHM {target_fwhm:g} s not above the intrinsic width {intrinsic:g} s"
        )

    def resid(p):
        width = fwhm(convolve_g2(base, DetectorResponse(p[0] * gamma_det0)))
        return np.array([(width - target_fwhm) / target_fwhm])

    prob = FitProblem(resid, [1.0], lower=[1e-3], names=["gamma_det"], xtol=1e-12, ftol=1e-20, gtol=1e-16)
    res = least_squares(prob)
    res.x = res.x * gamma_det0
    res.stderr = res.stderr * gamma_det0
    res.extra = {"intrinsic_fwhm_s": intrinsic, "target_fwhm_s": target_fwhm}
    return res

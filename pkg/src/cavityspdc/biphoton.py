"""
Signal-idler cross-correlation of a doubly resonant SPDC cavity.

The correlation is a double sum over signal/idler cavity modes,

    G2(tau) ~ | sum_{ms, mi} sqrt(gs gi ws wi) / (Gs + Gi) * B(tau) |^2

    B = exp(-2 pi Gs (tau - tau0/2)) sinc(i pi tau0 Gs)   tau >= tau0/2
        exp(+2 pi Gi (tau - tau0/2)) sinc(i pi tau0 Gi)   tau <  tau0/2

with complex mode rates ``G = gamma/2 + i m FSR``. ``gamma`` is the FWHM
linewidth in Hz, so for a single mode the intensity decays as
``exp(-2 pi gamma |tau|)``. The branch only depends on one of the two mode
indices, which lets the double sum collapse to a row/column sum of the
``1/(Gs + Gi)`` matrix followed by a single Fourier-type sum per tau.

Detection smears the curve with a one-sided response
``phi(t) = alpha exp(gamma_det t / 2)`` for ``t <= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError

MAX_MODES = 512
TRUNCATION_REL = 1e-6
DEFAULT_STEP = 0.5e-12
DEFAULT_SPAN = 5e-9
MAX_CONVOLVE_STEP = 1e-12
_CHUNK = 2048


@dataclass(frozen=True)
class BiphotonModel:
    """Parameters of the mode-sum correlation.

    ``modes`` is the truncation bound M (mode indices run over -M..M); ``None``
    picks it from the weight decay, see :func:`truncation_order`. ``weight``
    maps a signal detuning in Hz to a relative mode amplitude (uniform when
    ``None``); idler mode ``m`` is weighted at signal detuning ``-m * fsr_i``.
    """

    gamma_s: float
    gamma_i: float
    fsr_s: float = 93.61e9
    fsr_i: float = 89.42e9
    center_s: float = 193.4e12
    center_i: float = 193.4e12
    tau0: float = 0.0
    modes: int | None = 0
    weight: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.gamma_s > 0 and self.gamma_i > 0):
            raise DomainError(f"damping rates must be > 0, got {self.gamma_s}, {self.gamma_i}")
        if self.tau0 < 0:
            raise DomainError(f"tau0 must be >= 0, got {self.tau0}")
        if self.modes is not None and not 0 <= self.modes <= MAX_MODES:
            raise DomainError(f"mode bound must be in [0, {MAX_MODES}], got {self.modes}")
        if not (self.fsr_s > 0 and self.fsr_i > 0):
            raise DomainError("FSRs must be > 0")

    @property
    def single_mode(self) -> bool:
        return self.modes == 0

    def resolved_modes(self) -> int:
        return truncation_order(self) if self.modes is None else self.modes


@dataclass(frozen=True)
class DetectorResponse:
    gamma: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"detector damping rate must be > 0, got {self.gamma}")


@dataclass
class G2Curve:
    tau: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.tau.shape != self.values.shape or self.tau.ndim != 1 or self.tau.size < 3:
            raise DomainError("G2 curve needs matching 1-D time and value arrays (>= 3 samples)")
        d = np.diff(self.tau)
        if np.any(d <= 0):
            raise DomainError("G2 time grid must be strictly increasing")
        if np.ptp(d) > 1e-6 * d.mean():
            raise DomainError("G2 time grid must be uniform")
        if np.any(self.values < 0):
            raise DomainError("G2 values must be nonnegative")

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0])


def _csinc(z):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.sin(z[nz]) / z[nz]
    return out


def _mode_weights(model: BiphotonModel, m: np.ndarray):
    if model.weight is None:
        return np.ones(m.shape), np.ones(m.shape)
    ws = np.asarray(model.weight(m * model.fsr_s), dtype=float)
    wi = np.asarray(model.weight(-m * model.fsr_i), dtype=float)
    return ws, wi


def _pair_matrix(model: BiphotonModel, M: int):
    m = np.arange(-M, M + 1)
    rate_s = 0.5 * model.gamma_s + 1j * m * model.fsr_s
    rate_i = 0.5 * model.gamma_i + 1j * m * model.fsr_i
    ws, wi = _mode_weights(model, m)
    pair = (ws[:, None] * wi[None, :]) / (rate_s[:, None] + rate_i[None, :])
    return m, rate_s, rate_i, pair


def truncation_order(model: BiphotonModel, rel=TRUNCATION_REL, cap=MAX_MODES) -> int:
    """Smallest M such that the summed ``|w_s w_i / (Gs + Gi)|`` of all mode
    pairs outside -M..M is below ``rel`` times the central pair.

    A per-pair threshold is not enough: the many small off-diagonal pairs add
    up coherently and shift G2 by far more than ``rel``.
    """
    _, _, _, pair = _pair_matrix(model, cap)
    mag = np.abs(pair)
    ref = mag[cap, cap]
    idx = np.arange(-cap, cap + 1)
    shell = np.maximum(np.abs(idx)[:, None], np.abs(idx)[None, :])
    shell_sum = np.bincount(shell.ravel(), weights=mag.ravel(), minlength=cap + 1)
    # tail[k] = mass of shells k+1 .. cap
    tail = np.concatenate([np.cumsum(shell_sum[::-1])[::-1][1:], [0.0]])
    return int(np.argmax(tail < rel * ref))


def _coefficients(model: BiphotonModel):
    M = model.resolved_modes()
    m, rate_s, rate_i, pair = _pair_matrix(model, M)
    pref = np.sqrt(model.gamma_s * model.gamma_i * model.center_s * model.center_i)
    a_s = pref * _csinc(1j * np.pi * model.tau0 * rate_s) * pair.sum(axis=1)
    a_i = pref * _csinc(1j * np.pi * model.tau0 * rate_i) * pair.sum(axis=0)
    return m, a_s, a_i


def _side_sum(coef, m, decay, fsr, t, sign):
    # sum_m coef_m exp(sign * 2 pi (decay + i m fsr) t), evaluated in chunks of t
    out = np.empty(t.shape, dtype=complex)
    for k in range(0, t.size, _CHUNK):
        tt = t[k : k + _CHUNK]
        phase = np.exp(sign * 2j * np.pi * fsr * np.multiply.outer(tt, m))
        out[k : k + _CHUNK] = (phase * coef).sum(axis=1) * np.exp(sign * 2 * np.pi * decay * tt)
    return out


def g2(model: BiphotonModel, tau):
    """Unnormalised G2 at delay(s) ``tau`` (s). Positive tau: signal after idler."""
    tau = np.asarray(tau, dtype=float)
    flat = np.atleast_1d(tau).ravel()
    m, a_s, a_i = _coefficients(model)
    t = flat - model.tau0 / 2
    amp = np.empty(flat.shape, dtype=complex)
    pos = t >= 0
    amp[pos] = _side_sum(a_s, m, 0.5 * model.gamma_s, model.fsr_s, t[pos], -1)
    amp[~pos] = _side_sum(a_i, m, 0.5 * model.gamma_i, model.fsr_i, t[~pos], +1)
    out = (amp.real**2 + amp.imag**2).reshape(np.shape(tau))
    return float(out) if out.ndim == 0 else out


def time_grid(span=DEFAULT_SPAN, step=DEFAULT_STEP):
    n = int(round(span / step))
    return np.arange(-n, n + 1) * step


def g2_curve(model: BiphotonModel, span=DEFAULT_SPAN, step=DEFAULT_STEP) -> G2Curve:
    """Peak-normalised G2 on a uniform grid ``[-span, span]``."""
    tau = time_grid(span, step)
    v = g2(model, tau)
    v = v / v.max()
    meta = {"model": "cavity-spdc-mode-sum", "step_s": step, "modes": model.resolved_modes()}
    return G2Curve(tau, v, meta)


def detector_response(resp: DetectorResponse, t):
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 0, resp.alpha * np.exp(np.minimum(t, 0.0) * resp.gamma / 2), 0.0)
    return float(out) if out.ndim == 0 else out


def response_kernel(resp: DetectorResponse, step: float, n_max: int):
    """Response sampled at ``t = -k*step`` (k = 0..K), truncated at e^-30."""
    K = min(n_max - 1, int(np.ceil(60.0 / resp.gamma / step)))
    return detector_response(resp, -np.arange(K + 1) * step)


def convolve_g2(curve: G2Curve, resp: DetectorResponse, rebin: float | None = None, normalize=True) -> G2Curve:
    """Detected coincidence curve ``(G2 * phi)(t)`` on the input grid.

    The sum runs over grid samples: ``out[n] = sum_k G2[n + k] phi(-k dt)``.
    With ``rebin`` the result is averaged into bins of that width (centred on
    zero delay).
    """
    dt = curve.step
    if dt > MAX_CONVOLVE_STEP * (1 + 1e-9):
        raise DomainError(f"grid step {dt:g} s too coarse for convolution (need <= {MAX_CONVOLVE_STEP:g} s)")
    kern = response_kernel(resp, dt, curve.values.size)
    K = kern.size - 1
    full = fftconvolve(curve.values, kern[::-1])
    # FFT round-off can leave tiny negative values in the far tails
    out = np.clip(full[K : K + curve.values.size], 0.0, None)
    if normalize:
        out = out / out.max()
    meta = dict(curve.meta, detector_gamma=resp.gamma)
    result = G2Curve(curve.tau.copy(), out, meta)
    if rebin:
        result = rebin_curve(result, rebin, normalize=normalize)
    return result


def bin_edges(width: float, half_range: float):
    """Edges of bins of ``width`` centred on zero, covering ``[-half_range, half_range]``."""
    n = int(np.floor(half_range / width + 0.5))
    return (np.arange(-n, n + 2) - 0.5) * width


def bin_integrals(tau, values, edges):
    """Integral of a sampled curve over each bin, from cumulative trapezoids."""
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(tau))])
    return np.diff(np.interp(edges, tau, cum))


def rebin_curve(curve: G2Curve, width: float, normalize=True) -> G2Curve:
    half = min(-curve.tau[0], curve.tau[-1]) - width / 2
    edges = bin_edges(width, half)
    edges = edges[(edges >= curve.tau[0]) & (edges <= curve.tau[-1])]
    v = bin_integrals(curve.tau, curve.values, edges) / width
    if normalize:
        v = v / v.max()
    centers = 0.5 * (edges[1:] + edges[:-1])
    return G2Curve(centers, v, dict(curve.meta, bin_width_s=width))


def comb_peaks(curve: G2Curve, min_separation: float | None = None):
    """Positions and values of the local maxima of a curve.

    With ``min_separation`` only the highest maximum within that distance is
    kept, which picks one peak per comb period.
    """
    from scipy.signal import find_peaks

    v = curve.values
    distance = None if not min_separation else max(1, int(min_separation / curve.step))
    idx, _ = find_peaks(v, distance=distance)
    # the global maximum may sit on a cusp that find_peaks misses at the edges of a plateau
    top = int(np.argmax(v))
    if top not in idx and 0 < top < v.size - 1:
        idx = np.sort(np.append(idx, top))
    return curve.tau[idx], v[idx]


def _crossing(x0, y0, x1, y1, level):
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def fwhm(curve: G2Curve, envelope: bool | None = None, min_separation: float | None = None) -> float:
    """Full width at half maximum, between the outermost half-max crossings.

    Comb-shaped curves are measured on the piecewise-linear envelope through
    their local maxima. ``envelope=None`` switches to that mode when more than
    one local maximum reaches half height.
    """
    tau, v = curve.tau, curve.values
    top = int(np.argmax(v))
    if top == 0 or top == v.size - 1:
        raise DomainError("curve maximum lies on the grid edge; FWHM is ill-posed")
    half = 0.5 * v[top]
    if envelope is None:
        pt, pv = comb_peaks(curve, min_separation)
        envelope = int(np.sum(pv >= half)) > 1
    if envelope:
        x, y = comb_peaks(curve, min_separation)
    else:
        x, y = tau, v
    above = np.nonzero(y >= half)[0]
    i, j = above[0], above[-1]
    if i == 0 or j == y.size - 1:
        raise DomainError("half-maximum crossing lies outside the sampled range")
    left = _crossing(x[i - 1], y[i - 1], x[i], y[i], half)
    right = _crossing(x[j], y[j], x[j + 1], y[j + 1], half)
    return float(right - left)


def t_fwhm_analytic(gamma_s: float, gamma_i: float) -> float:
    """Correlation time ``1.39 / (2 pi sqrt(gamma_s gamma_i))``."""
    if not (gamma_s > 0 and gamma_i > 0):
        raise DomainError("damping rates must be > 0")
    return 1.39 / (2 * np.pi * np.sqrt(gamma_s * gamma_i))


def delay_sampler(curve: G2Curve):
    """Inverse-CDF sampler ``u -> tau`` for the normalised density of ``curve``."""
    tau, v = curve.tau, curve.values
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(tau))])
    cum /= cum[-1]
    keep = np.concatenate([[True], np.diff(cum) > 0])

    def sample(u):
        return np.interp(u, cum[keep], tau[keep])

    return sample

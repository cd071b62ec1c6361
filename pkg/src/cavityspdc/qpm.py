"""
Quasi-phase-matching for type-II SPDC (pump y -> signal y + idler z).

The grating vector is oriented against the material mismatch, i.e.

    dk = k_p - k_s - k_i - sgn(k_p - k_s - k_i) * 2 pi m / Lambda,

so that a positive poling period can always close the momentum balance. For
the KTP process shipped here ``k_p < k_s + k_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c

from .dispersion import CrystalSpec
from .errors import DomainError, NoSolutionError

TYPE_II_AXES = ("y", "y", "z")
BRACKET = (10e-6, 100e-6)
DK_TOL = 1e-6  # 1/m


@dataclass(frozen=True)
class SpdcProcess:
    pump: float
    signal: float
    idler: float
    temperature: float | None = None
    order: int = 1
    axes: tuple[str, str, str] = TYPE_II_AXES

    def __post_init__(self):
        if min(self.pump, self.signal, self.idler) <= 0:
            raise DomainError("wavelengths must be positive")
        lhs = 1.0 / self.pump
        rhs = 1.0 / self.signal + 1.0 / self.idler
        if abs(lhs - rhs) > 1e-9 * lhs:
            raise DomainError(
                f"energy not conserved: 1/lp={lhs:.12g}, 1/ls+1/li={rhs:.12g} (relative error {abs(lhs - rhs) / lhs:.3g})"
            )
        if self.order < 1 or self.order % 2 == 0:
            raise DomainError(f"QPM order must be a positive odd integer, got {self.order}")
        if tuple(self.axes) != TYPE_II_AXES:
            raise DomainError(f"only the type-II process {TYPE_II_AXES} is supported, got {self.axes}")

    @classmethod
    def degenerate(cls, pump: float, temperature=None, order=1):
        return cls(pump, 2 * pump, 2 * pump, temperature, order)

    def detuned(self, delta_hz: float) -> "SpdcProcess":
        """Shift the signal by ``delta_hz``; the idler follows by energy conservation."""
        fs = c / self.signal + delta_hz
        fi = c / self.idler - delta_hz
        if fs <= 0 or fi <= 0:
            raise DomainError(f"detuning {delta_hz:g} Hz leaves a non-positive frequency")
        return replace(self, signal=c / fs, idler=c / fi)


def _temperature(proc, crystal, temperature=None):
    if temperature is not None:
        return temperature
    return crystal.temperature if proc.temperature is None else proc.temperature


def material_mismatch(proc: SpdcProcess, crystal: CrystalSpec, temperature=None) -> float:
    """``k_p - k_s - k_i`` in 1/m, without the grating."""
    t = _temperature(proc, crystal, temperature)
    ap, as_, ai = proc.axes
    kp = 2 * np.pi * crystal.index(ap, proc.pump, t) / proc.pump
    ks = 2 * np.pi * crystal.index(as_, proc.signal, t) / proc.signal
    ki = 2 * np.pi * crystal.index(ai, proc.idler, t) / proc.idler
    return kp - ks - ki


def _grating(dk_mat, period, order):
    return math.copysign(2 * np.pi * order / period, dk_mat)


def phase_mismatch(proc: SpdcProcess, crystal: CrystalSpec, poling_period=None, temperature=None) -> float:
    """Phase mismatch dk in 1/m, including the QPM grating."""
    period = crystal.poling_period if poling_period is None else poling_period
    dk = material_mismatch(proc, crystal, temperature)
    return dk - _grating(dk, period, proc.order)


def solve_poling_period(pump, signal, idler, crystal: CrystalSpec, temperature=None, order=1) -> float:
    """Poling period (m) that phase-matches the given wavelengths.

    Bisection over ``order * [10, 100]`` um until ``|dk| < 1e-6 1/m``.
    """
    proc = SpdcProcess(pump, signal, idler, temperature, order)
    dk_mat = material_mismatch(proc, crystal, temperature)
    lo, hi = BRACKET[0] * order, BRACKET[1] * order

    def f(period):
        return dk_mat - _grating(dk_mat, period, order)

    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoSolutionError(
            f"no phase-matching period in [{lo * 1e6:g}, {hi * 1e6:g}] um "
            f"(material mismatch {dk_mat:.6g} 1/m needs {2 * np.pi * order / abs(dk_mat) * 1e6:.4g} um)"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < DK_TOL or mid in (lo, hi):
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gain_spectrum(proc: SpdcProcess, crystal: CrystalSpec, detuning, poling_period=None):
    """Single-pass SPDC envelope ``sinc^2(dk L / 2)`` versus signal detuning (Hz).

    Not renormalised: the value is 1 only where dk vanishes.
    """
    detuning = np.atleast_1d(np.asarray(detuning, dtype=float))
    period = crystal.poling_period if poling_period is None else poling_period
    t = _temperature(proc, crystal)
    fs0, fi0 = c / proc.signal, c / proc.idler
    fs, fi = fs0 + detuning, fi0 - detuning
    if np.any(fs <= 0) or np.any(fi <= 0):
        raise DomainError("detuning grid leaves non-positive frequencies")
    ap, as_, ai = proc.axes
    kp = 2 * np.pi * crystal.index(ap, proc.pump, t) / proc.pump
    ks = 2 * np.pi * crystal.index(as_, c / fs, t) * fs / c
    ki = 2 * np.pi * crystal.index(ai, c / fi, t) * fi / c
    dk_mat = kp - ks - ki
    # grating orientation fixed by the undetuned process
    sign = math.copysign(1.0, material_mismatch(proc, crystal, t))
    dk = dk_mat - sign * 2 * np.pi * proc.order / period
    x = dk * crystal.length / 2
    return np.sinc(x / np.pi) ** 2


def gain_fwhm(proc: SpdcProcess, crystal: CrystalSpec, poling_period=None, span=20e12, n=20001) -> float:
    """FWHM (Hz) of the gain envelope, from half-max crossings of a scan."""
    d = np.linspace(-span / 2, span / 2, n)
    g = gain_spectrum(proc, crystal, d, poling_period)
    k = int(np.argmax(g))
    half = 0.5 * g[k]
    left = k
    while left > 0 and g[left - 1] >= half:
        left -= 1
    right = k
    while right < n - 1 and g[right + 1] >= half:
        right += 1
    if left == 0 or right == n - 1:
        raise DomainError("gain envelope not contained in the scan span")
    xl = np.interp(half, [g[left - 1], g[left]], [d[left - 1], d[left]])
    xr = np.interp(half, [g[right + 1], g[right]], [d[right + 1], d[right]])
    return xr - xl

"""
Interference observables: Franson two-photon fringes, single-photon Michelson
coherence decay of a Lorentzian line, and thermal phase tuning of fiber UMIs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c

from .errors import DomainError


@dataclass(frozen=True)
class FransonConfig:
    visibility: float
    idler_phase: float = 0.0
    background: float = 0.0

    def __post_init__(self):
        if not 0 <= self.visibility <= 1:
            raise DomainError(f"visibility must be in [0, 1], got {self.visibility}")
        if self.background < 0:
            raise DomainError("background must be >= 0")


def franson_coincidence(cfg: FransonConfig, signal_phase, amplitude):
    """Expected coincidences ``bg + A (1 + V cos(phi_s + phi_i)) / 2``."""
    if not amplitude > 0:
        raise DomainError(f"amplitude must be > 0, got {amplitude}")
    phi = np.asarray(signal_phase, dtype=float)
    out = cfg.background + amplitude * (1 + cfg.visibility * np.cos(phi + cfg.idler_phase)) / 2
    return float(out) if out.ndim == 0 else out


def visibility_from_extrema(c_max, c_min):
    if c_min < 0 or c_max < c_min or not c_max > 0:
        raise DomainError(f"need c_max >= c_min >= 0 and c_max > 0, got ({c_max}, {c_min})")
    return (c_max - c_min) / (c_max + c_min)


def net_visibility(c_max, c_min, accidentals):
    """Visibility after removing a constant accidental level from both extrema."""
    if accidentals < 0 or accidentals > c_min:
        raise DomainError(f"accidental level {accidentals} must lie in [0, c_min={c_min}]")
    return visibility_from_extrema(c_max - accidentals, c_min - accidentals)


@dataclass(frozen=True)
class MichelsonModel:
    linewidth: float  # spectral FWHM, Hz
    center: float  # Hz
    background: float = 0.0  # R

    def __post_init__(self):
        if not self.linewidth > 0:
            raise DomainError(f"linewidth must be > 0, got {self.linewidth}")
        if self.background < 0:
            raise DomainError(f"background ratio must be >= 0, got {self.background}")


def _coherence(linewidth, path_difference):
    return np.exp(-np.pi * np.abs(linewidth * np.asarray(path_difference, dtype=float) / c))


def michelson_intensity(model: MichelsonModel, path_difference, i0=1.0):
    L = np.asarray(path_difference, dtype=float)
    out = 2 * i0 + 2 * i0 * _coherence(model.linewidth, L) * np.cos(2 * np.pi * model.center * L / c)
    return float(out) if out.ndim == 0 else out


def michelson_visibility(model: MichelsonModel, path_difference):
    """Fringe visibility ``exp(-pi |dnu L / c|) / (1 + R/2)``."""
    out = _coherence(model.linewidth, path_difference) / (1 + model.background / 2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class UmiThermal:
    """Fiber unbalanced Michelson interferometer.

    Give either ``length_difference`` directly or ``delay`` (with ``index``),
    in which case ``L_d = c * delay / (2 n)``.
    """

    dn_dT: float
    wavelength: float = 1550e-9
    length_difference: float | None = None
    delay: float | None = None
    index: float = 1.468

    def __post_init__(self):
        if self.length_difference is None and self.delay is None:
            raise DomainError("need length_difference or delay")
        if self.length_difference is not None and self.delay is not None:
            derived = c * self.delay / (2 * self.index)
            if abs(derived - self.length_difference) > 1e-6 * self.length_difference:
                raise DomainError(
                    f"length difference {self.length_difference} m inconsistent with "
                    f"c*dt/2n = {derived:.9g} m"
                )

    @property
    def arm_length(self) -> float:
        if self.length_difference is not None:
            return self.length_difference
        return length_from_delay(self.delay, self.index)


def length_from_delay(delay, index):
    if not (delay > 0 and index > 0):
        raise DomainError("delay and index must be > 0")
    return c * delay / (2 * index)


def umi_tuning_period(umi: UmiThermal) -> float:
    """Temperature change (K) for one 2 pi phase period, ``lam / (2 L_d dn/dT)``."""
    L = umi.arm_length
    if not (L > 0 and umi.dn_dT > 0 and umi.wavelength > 0):
        raise DomainError("wavelength, arm length difference and dn/dT must be > 0")
    return umi.wavelength / (2 * L * umi.dn_dT)

"""
Fabry-Perot cavity model for each polarization of a monolithic crystal cavity.

The free spectral range of a linear cavity is the inverse round-trip group
delay, ``c / (2 n_g L)``. When measured FSR or linewidth values are supplied
they replace the derived ones verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c

from .dispersion import CrystalSpec
from .errors import DomainError

DERIVED = "derived-from-dispersion"
MEASURED = "measured-override"

# polarization aliases -> crystal axis
_AXIS = {"y": "y", "z": "z", "signal": "y", "idler": "z", "horizontal": "y", "vertical": "z", "h": "y", "v": "z"}


def crystal_axis(label: str) -> str:
    try:
        return _AXIS[label.lower()]
    except KeyError:
        raise DomainError(f"unknown polarization label {label!r}") from None


def fsr(crystal: CrystalSpec, axis: str, wavelength: float) -> float:
    """Derived free spectral range in Hz, ``c / (2 n_g L)``."""
    ng = crystal.group(crystal_axis(axis), wavelength)
    return c / (2.0 * ng * crystal.length)


@dataclass(frozen=True)
class CavityModeStructure:
    polarization: str
    fsr: float
    linewidth: float
    center: float
    source: str = MEASURED

    def __post_init__(self):
        if not self.fsr > 0:
            raise DomainError(f"{self.polarization}: FSR must be > 0, got {self.fsr}")
        if not 0 < self.linewidth < self.fsr:
            raise DomainError(
                f"{self.polarization}: linewidth {self.linewidth:g} Hz must lie in (0, FSR={self.fsr:g} Hz)"
            )
        if not self.center > 0:
            raise DomainError(f"{self.polarization}: center frequency must be > 0")

    @property
    def finesse(self) -> float:
        return self.fsr / self.linewidth

    @classmethod
    def derived(cls, crystal, polarization, wavelength, linewidth):
        """Build from dispersion. The linewidth is not derivable and must be given."""
        return cls(polarization, fsr(crystal, polarization, wavelength), linewidth, c / wavelength, DERIVED)


class Cavity:
    """Per-polarization FSR and linewidth with optional measured overrides.

    ``fsr_override`` / ``linewidth`` map polarization labels (``"y"``/``"z"``
    or aliases) to Hz.
    """

    def __init__(self, crystal: CrystalSpec | None, wavelength: float, fsr_override=None, linewidth=None):
        self.crystal = crystal
        self.wavelength = wavelength
        self._fsr = {crystal_axis(k): float(v) for k, v in (fsr_override or {}).items()}
        self._lw = {crystal_axis(k): float(v) for k, v in (linewidth or {}).items()}
        if crystal is None and len(self._fsr) < 2:
            raise DomainError("without a crystal, measured FSRs for both axes are required")

    def fsr(self, axis: str) -> float:
        a = crystal_axis(axis)
        if a in self._fsr:
            return self._fsr[a]
        return fsr(self.crystal, a, self.wavelength)

    def linewidth(self, axis: str) -> float:
        a = crystal_axis(axis)
        if a not in self._lw:
            raise DomainError(f"no linewidth configured for axis {a!r}")
        return self._lw[a]

    def source(self, axis: str) -> str:
        return MEASURED if crystal_axis(axis) in self._fsr else DERIVED

    def mode_structure(self, axis: str) -> CavityModeStructure:
        a = crystal_axis(axis)
        return CavityModeStructure(a, self.fsr(a), self.linewidth(a), c / self.wavelength, self.source(a))


@dataclass(frozen=True)
class LorentzianLine:
    center: float
    fwhm: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise DomainError(f"Lorentzian FWHM must be > 0, got {self.fwhm}")


def lorentzian(line: LorentzianLine, nu):
    """Unit-area Lorentzian density (1/Hz)."""
    if not line.fwhm > 0:
        raise DomainError(f"Lorentzian FWHM must be > 0, got {line.fwhm}")
    hw = 0.5 * line.fwhm
    d = np.asarray(nu, dtype=float) - line.center
    out = (line.fwhm / (2 * np.pi)) / (d * d + hw * hw)
    return float(out) if np.ndim(out) == 0 else out


def mode_comb(structure: CavityModeStructure, center: float, half_width: float):
    """Modes ``nu0 + m*FSR`` inside the closed interval ``[center - hw, center + hw]``.

    Returns ``(m, frequency)`` tuples in ascending frequency.
    """
    if not half_width > 0:
        raise DomainError(f"half_width must be > 0, got {half_width}")
    f0, d = structure.center, structure.fsr
    lo = int(np.ceil((center - half_width - f0) / d))
    hi = int(np.floor((center + half_width - f0) / d))
    # guard against round-off at the closed edges
    while f0 + (lo - 1) * d >= center - half_width:
        lo -= 1
    while f0 + (hi + 1) * d <= center + half_width:
        hi += 1
    return [(m, f0 + m * d) for m in range(lo, hi + 1)]


def synth_transmission_scan(structures, start, stop, n_samples, noise=0.0, seed=0):
    """Synthetic cavity transmission scan.

    Each mode contributes a Lorentzian peak of unit height; seeded Gaussian
    noise with standard deviation ``noise`` (relative to the peak) is added.
    Returns ``(freq_hz, transmission)`` arrays.
    """
    structures = list(structures)
    if not structures:
        raise DomainError("need at least one cavity mode structure")
    span = stop - start
    widest = max(s.fsr for s in structures)
    if span < widest:
        raise DomainError(f"scan span {span:g} Hz must cover at least one FSR ({widest:g} Hz)")
    freq = np.linspace(start, stop, int(n_samples))
    trans = np.zeros_like(freq)
    mid, hw = 0.5 * (start + stop), 0.5 * span
    for s in structures:
        # include modes just outside the window so their tails are present
        for _, f in mode_comb(s, mid, hw + 50 * s.linewidth):
            trans += 1.0 / (1.0 + ((freq - f) / (0.5 * s.linewidth)) ** 2)
    if noise:
        rng = np.random.default_rng(seed)
        trans = trans + rng.normal(0.0, noise, size=freq.shape)
    return freq, trans

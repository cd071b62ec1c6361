"""
Axis-resolved refractive and group index of the nonlinear crystal.

Coefficients live in ``data/ktp_sellmeier.json``. Each axis uses the
two-pole Sellmeier form

    n^2 = A + B / (1 - C / lam^2) + D / (1 - E / lam^2) - F lam^2

with ``lam`` in microns (the y axis simply has D = E = 0). Temperature enters
as a first-order correction about the reference temperature,

    n(lam, T) = n(lam, T0) + dn/dT(lam) * (T - T0),
    dn/dT(lam) = 1e-6 * sum_m a_m / lam^m.

All public functions take wavelengths in metres and temperatures in degrees
Celsius.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError

# central-difference step for dn/dlam, metres
GROUP_INDEX_STEP = 0.1e-9

AXES = ("y", "z")


@dataclass(frozen=True)
class SellmeierSet:
    axis: str
    coefficients: tuple[float, ...]
    valid_wavelength_um: tuple[float, float]
    valid_temp_c: tuple[float, float]
    dn_dT: tuple[float, ...]
    reference_temp_c: float = 25.0
    citation: str = ""

    def __post_init__(self):
        if self.axis not in AXES:
            raise DomainError(f"axis must be one of {AXES}, got {self.axis!r}")
        if len(self.coefficients) != 6:
            raise DomainError("Sellmeier set needs 6 coefficients (A, B, C, D, E, F)")
        lo, hi = self.valid_wavelength_um
        if not 0 < lo < hi:
            raise DomainError(f"bad wavelength validity range {self.valid_wavelength_um}")
        tlo, thi = self.valid_temp_c
        if not tlo < thi:
            raise DomainError(f"bad temperature validity range {self.valid_temp_c}")

    @property
    def center_wavelength(self) -> float:
        """Centre of the validity range in metres."""
        return 0.5e-6 * sum(self.valid_wavelength_um)

    @property
    def center_temperature(self) -> float:
        return 0.5 * sum(self.valid_temp_c)

    def check(self, wavelength, temperature, margin=0.0):
        lam_um = np.asarray(wavelength, dtype=float) * 1e6
        lo, hi = self.valid_wavelength_um
        m = margin * 1e6
        if np.any(lam_um - m < lo):
            raise DomainError(
                f"{self.axis}-axis: wavelength {np.min(lam_um):.6g} um below lower bound {lo} um"
                + (" (including finite-difference margin)" if margin else "")
            )
        if np.any(lam_um + m > hi):
            raise DomainError(
                f"{self.axis}-axis: wavelength {np.max(lam_um):.6g} um above upper bound {hi} um"
                + (" (including finite-difference margin)" if margin else "")
            )
        t = np.asarray(temperature, dtype=float)
        tlo, thi = self.valid_temp_c
        if np.any(t < tlo):
            raise DomainError(f"{self.axis}-axis: temperature {np.min(t):g} C below lower bound {tlo} C")
        if np.any(t > thi):
            raise DomainError(f"{self.axis}-axis: temperature {np.max(t):g} C above upper bound {thi} C")


@dataclass(frozen=True)
class CrystalSpec:
    """Nonlinear crystal geometry plus its per-axis dispersion.

    ``length`` is measured along the pump propagation direction (x for the
    shipped configuration); ``transverse`` is informational only.
    """

    length: float
    poling_period: float
    temperature: float
    sellmeier: dict
    transverse: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError(f"crystal length must be > 0, got {self.length}")
        if not self.poling_period > 0:
            raise DomainError(f"poling period must be > 0, got {self.poling_period}")
        if set(self.sellmeier) != set(AXES):
            raise DomainError(f"need exactly one Sellmeier set per axis {AXES}, got {sorted(self.sellmeier)}")
        for axis, s in self.sellmeier.items():
            if s.axis != axis:
                raise DomainError(f"Sellmeier set for {axis!r} is labelled {s.axis!r}")

    def index(self, axis, wavelength, temperature=None):
        t = self.temperature if temperature is None else temperature
        return refractive_index(self.sellmeier[axis], wavelength, t)

    def group(self, axis, wavelength, temperature=None):
        t = self.temperature if temperature is None else temperature
        return group_index(self.sellmeier[axis], wavelength, t)


def _parse_axis(record: dict, reference_temp_c: float) -> SellmeierSet:
    return SellmeierSet(
        axis=record["axis"],
        coefficients=tuple(float(x) for x in record["coefficients"]),
        valid_wavelength_um=tuple(record["valid_wavelength_um"]),
        valid_temp_c=tuple(record["valid_temp_c"]),
        dn_dT=tuple(float(x) for x in np.atleast_1d(record["dn_dT"])),
        reference_temp_c=float(record.get("reference_temp_c", reference_temp_c)),
        citation=record.get("citation", ""),
    )


def load_sellmeier(path=None) -> dict[str, SellmeierSet]:
    """Load a coefficient file. ``None`` loads the shipped KTP data."""
    if path is None:
        text = resources.files("cavityspdc").joinpath("data/ktp_sellmeier.json").read_text()
        return _parse_doc(json.loads(text))
    return _parse_doc(json.loads(Path(path).read_text()))


def _parse_doc(doc) -> dict[str, SellmeierSet]:
    t0 = float(doc.get("reference_temp_c", 25.0)) if isinstance(doc, dict) else 25.0
    records = doc["axes"] if isinstance(doc, dict) else doc
    sets = {}
    for rec in records:
        s = _parse_axis(rec, t0)
        if s.axis in sets:
            raise DomainError(f"duplicate Sellmeier record for axis {s.axis!r}")
        sets[s.axis] = s
    return sets


@lru_cache(maxsize=1)
def _default_sets():
    return tuple(load_sellmeier().items())


def ktp() -> dict[str, SellmeierSet]:
    """The shipped KTP coefficient sets keyed by axis."""
    return dict(_default_sets())


def _n_ref(coeffs, lam_um):
    A, B, C, D, E, F = coeffs
    l2 = lam_um * lam_um
    return np.sqrt(A + B / (1.0 - C / l2) + D / (1.0 - E / l2) - F * l2)


def _dn_dT(a, lam_um):
    return 1e-6 * sum(am / lam_um**m for m, am in enumerate(a))


def _n_unchecked(s: SellmeierSet, wavelength, temperature):
    lam_um = np.asarray(wavelength, dtype=float) * 1e6
    n = _n_ref(s.coefficients, lam_um)
    return n + _dn_dT(s.dn_dT, lam_um) * (np.asarray(temperature, dtype=float) - s.reference_temp_c)


def refractive_index(s: SellmeierSet, wavelength, temperature):
    """Phase index n(lam, T). Scalars in, scalar out; arrays broadcast."""
    s.check(wavelength, temperature)
    n = _n_unchecked(s, wavelength, temperature)
    return float(n) if np.ndim(n) == 0 else n


def dn_dlambda(s: SellmeierSet, wavelength, temperature, step=GROUP_INDEX_STEP):
    s.check(wavelength, temperature, margin=step)
    lam = np.asarray(wavelength, dtype=float)
    return (_n_unchecked(s, lam + step, temperature) - _n_unchecked(s, lam - step, temperature)) / (2 * step)


def group_index(s: SellmeierSet, wavelength, temperature, step=GROUP_INDEX_STEP):
    """n_g = n - lam dn/dlam, with the derivative taken by central difference."""
    lam = np.asarray(wavelength, dtype=float)
    ng = _n_unchecked(s, lam, temperature) - lam * dn_dlambda(s, lam, temperature, step)
    return float(ng) if np.ndim(ng) == 0 else ng

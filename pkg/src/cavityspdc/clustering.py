"""
Cluster-effect arithmetic for a doubly resonant, type-II cavity.

Signal (y) and idler (z) combs have slightly different FSRs, so the doubly
resonant frequencies repeat every cluster spacing. Between clusters the
nearest orthogonal modes are detuned by ``orthogonal_offset``; if the two
linewidths together fit inside that gap only the central doubly resonant pair
is emitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateBirefringenceError, DomainError


def _check(fsr_s, fsr_i):
    if not (fsr_s > 0 and fsr_i > 0):
        raise DomainError(f"FSRs must be positive, got {fsr_s}, {fsr_i}")
    if fsr_s == fsr_i:
        raise DegenerateBirefringenceError(
            f"signal and idler FSRs are equal ({fsr_s:g} Hz): cluster spacing is infinite"
        )
    if fsr_s < fsr_i:
        raise DomainError(
            f"expected signal FSR > idler FSR (n_z > n_y), got {fsr_s:g} < {fsr_i:g}; swap the arguments"
        )


def cluster_spacing(fsr_s: float, fsr_i: float) -> float:
    _check(fsr_s, fsr_i)
    return fsr_s * fsr_i / (fsr_s - fsr_i)


def mode_counts(fsr_s: float, fsr_i: float) -> tuple[float, float]:
    """Signal and idler modes per cluster spacing.

    With a common length the FSR scales as 1/n, so ``n_y/(n_z - n_y)`` equals
    ``fsr_i/(fsr_s - fsr_i)``.
    """
    _check(fsr_s, fsr_i)
    gap = fsr_s - fsr_i
    return fsr_i / gap, fsr_s / gap


def mode_counts_from_index(n_y: float, n_z: float) -> tuple[float, float]:
    if not n_z > n_y > 0:
        raise DomainError(f"need n_z > n_y > 0, got n_y={n_y}, n_z={n_z}")
    return n_y / (n_z - n_y), n_z / (n_z - n_y)


def orthogonal_offset(n: float, fsr_s: float, fsr_i: float) -> float:
    """Frequency gap between the nearest orthogonal modes one cluster away.

    At a fractional part of exactly 1/2 both branches give the same value.
    """
    if not n > 0:
        raise DomainError(f"mode count must be > 0, got {n}")
    _check(fsr_s, fsr_i)
    frac = math.fmod(n, 1.0)
    gap = fsr_s - fsr_i
    return frac * gap if frac < 0.5 else (1.0 - frac) * gap


def is_single_mode(offset: float, linewidth_s: float, linewidth_i: float) -> bool:
    return linewidth_s + linewidth_i < offset


@dataclass(frozen=True)
class ClusterAnalysis:
    fsr_s: float
    fsr_i: float
    cluster_spacing: float
    n_s: float
    n_i: float
    offset: float
    linewidth_s: float | None = None
    linewidth_i: float | None = None

    @property
    def single_mode(self) -> bool | None:
        if self.linewidth_s is None or self.linewidth_i is None:
            return None
        return is_single_mode(self.offset, self.linewidth_s, self.linewidth_i)

    def as_report(self) -> dict:
        return {
            "cluster_spacing_hz": self.cluster_spacing,
            "N_s": self.n_s,
            "N_i": self.n_i,
            "delta_nu_hz": self.offset,
            "single_mode": self.single_mode,
        }


def analyze(fsr_s, fsr_i, linewidth_s=None, linewidth_i=None) -> ClusterAnalysis:
    n_s, n_i = mode_counts(fsr_s, fsr_i)
    return ClusterAnalysis(
        fsr_s,
        fsr_i,
        cluster_spacing(fsr_s, fsr_i),
        n_s,
        n_i,
        orthogonal_offset(n_s, fsr_s, fsr_i),
        linewidth_s,
        linewidth_i,
    )

"""
Photon-counting simulation and the usual pair-source figures of merit.

Time tags are integer picoseconds. Pairs are generated slab by slab; each slab
draws from its own generator seeded with ``(seed, slab_index)``, so the merged
streams depend only on the configuration and the master seed, not on how many
workers produced them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .biphoton import DetectorResponse, G2Curve, bin_edges, delay_sampler
from .errors import DomainError

PS = 1e-12


@dataclass(frozen=True)
class DetectionChain:
    """Loss budget and noise of one detection arm.

    ``collection`` is the fiber collection efficiency (alpha), ``filter`` the
    filter transmittance (t), ``detector`` the detection efficiency (eta).
    """

    collection: float = 1.0
    filter: float = 1.0
    detector: float = 1.0
    duty_cycle: float = 1.0
    dark_rate: float = 0.0
    jitter: float = 0.0

    def __post_init__(self):
        for name in ("collection", "filter", "detector", "duty_cycle"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise DomainError(f"{name} must be in (0, 1], got {v}")
        if self.dark_rate < 0:
            raise DomainError(f"dark_rate must be >= 0, got {self.dark_rate}")
        if self.jitter < 0:
            raise DomainError(f"jitter must be >= 0, got {self.jitter}")

    @property
    def efficiency(self) -> float:
        """Probability that a generated photon is recorded."""
        return self.collection * self.filter * self.detector * self.duty_cycle


def db_to_transmission(loss_db: float) -> float:
    return 10 ** (-loss_db / 10)


@dataclass(frozen=True)
class SourceModel:
    """Pair source: ``rate_coeff`` pairs/s/mW at ``pump_mw``.

    ``delay`` is the (pre-detection) G2 curve used as the signal-idler delay
    density; ``response`` the one-sided detector response applied to the
    relative delay when the simulator runs with ``jitter_model="response"``.
    """

    rate_coeff: float
    pump_mw: float
    delay: G2Curve | None = None
    response: DetectorResponse | None = None

    def __post_init__(self):
        if self.rate_coeff < 0 or self.pump_mw < 0:
            raise DomainError("pair rate coefficient and pump power must be >= 0")

    @property
    def pair_rate(self) -> float:
        return self.rate_coeff * self.pump_mw


@dataclass
class TimeTagStream:
    channel: int
    timestamps: np.ndarray  # int64 picoseconds, sorted
    duration: float

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)

    def __len__(self):
        return self.timestamps.size

    @property
    def rate(self) -> float:
        return self.timestamps.size / self.duration

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.timestamps) >= 0))


def _slab(source, chain_s, chain_i, t0, length, key, jitter_model, sampler):
    rng = np.random.default_rng(np.random.SeedSequence(key))
    n = rng.poisson(source.pair_rate * length)
    t_pair = t0 + length * rng.random(n)
    keep_s = rng.random(n) < chain_s.efficiency
    keep_i = rng.random(n) < chain_i.efficiency
    tau = sampler(rng.random(n)) if sampler is not None else np.zeros(n)
    ts = t_pair + tau
    ti = t_pair.copy()
    if jitter_model == "response":
        if source.response is not None:
            # phi(t) ~ exp(gamma t / 2) for t <= 0: a negative exponential offset
            ts -= rng.exponential(2.0 / source.response.gamma, n)
    else:
        if chain_s.jitter:
            ts += rng.normal(0.0, chain_s.jitter, n)
        if chain_i.jitter:
            ti += rng.normal(0.0, chain_i.jitter, n)
    ds = t0 + length * rng.random(rng.poisson(chain_s.dark_rate * length))
    di = t0 + length * rng.random(rng.poisson(chain_i.dark_rate * length))
    s = np.rint(np.concatenate([ts[keep_s], ds]) / PS).astype(np.int64)
    i = np.rint(np.concatenate([ti[keep_i], di]) / PS).astype(np.int64)
    return s, i


def simulate_timetags(
    source: SourceModel,
    chain_s: DetectionChain,
    chain_i: DetectionChain,
    duration: float,
    seed=0,
    slab: float = 0.05,
    workers: int = 1,
    jitter_model: str = "response",
):
    """Generate sorted signal/idler tag streams.

    Pairs form a Poisson process at ``source.pair_rate``; each photon survives
    its arm with probability ``chain.efficiency``; the signal trails the idler
    by a delay drawn from ``source.delay``. Dark counts are independent
    Poisson processes. Tags falling outside ``[0, duration)`` are dropped.
    ``seed`` may be an int or a sequence of ints.
    """
    if not duration > 0:
        raise DomainError(f"duration must be > 0, got {duration}")
    if jitter_model not in ("response", "gaussian"):
        raise DomainError(f"jitter_model must be 'response' or 'gaussian', got {jitter_model!r}")
    sampler = delay_sampler(source.delay) if source.delay is not None else None
    n_slabs = max(1, math.ceil(duration / slab))
    bounds = [(k * slab, min(slab, duration - k * slab)) for k in range(n_slabs)]

    def run(k):
        t0, length = bounds[k]
        key = [int(v) for v in np.atleast_1d(seed)] + [k]
        return _slab(source, chain_s, chain_i, t0, length, key, jitter_model, sampler)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(n_slabs)))
    else:
        parts = [run(k) for k in range(n_slabs)]
    end = int(round(duration / PS))
    out = []
    for ch, arrs in ((0, [p[0] for p in parts]), (1, [p[1] for p in parts])):
        t = np.sort(np.concatenate(arrs), kind="stable")
        t = t[(t >= 0) & (t < end)]
        out.append(TimeTagStream(ch, t, duration))
    return out[0], out[1]


@dataclass
class CoincidenceHistogram:
    bin_width: float
    edges: np.ndarray  # seconds
    counts: np.ndarray
    acquisition_time: float
    meta: dict = field(default_factory=dict)

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram_coincidences(
    signal: TimeTagStream, idler: TimeTagStream, bin_width=25e-12, half_range=5e-9, chunk=1_000_000
) -> CoincidenceHistogram:
    """Histogram of ``t_signal - t_idler`` over every tag pair within range.

    Bins are centred on zero delay and half-open ``[lo, hi)``. Each signal tag
    is paired with all idler tags in the window (correlator semantics, not
    nearest-neighbour), found by binary search on the sorted idler stream.
    """
    if not signal.is_sorted() or not idler.is_sorted():
        raise DomainError("time-tag streams must be sorted")
    edges_ps = bin_edges(bin_width, half_range) / PS
    lo, hi, w = edges_ps[0], edges_ps[-1], bin_width / PS
    nbins = edges_ps.size - 1
    counts = np.zeros(nbins, dtype=np.int64)
    ti = idler.timestamps
    for k in range(0, signal.timestamps.size, chunk):
        ts = signal.timestamps[k : k + chunk]
        # delay in [lo, hi)  <=>  t_i in (ts - hi, ts - lo]
        a = np.searchsorted(ti, ts - hi, side="right")
        b = np.searchsorted(ti, ts - lo, side="right")
        n = b - a
        tot = int(n.sum())
        if tot == 0:
            continue
        rep = np.repeat(np.arange(ts.size), n)
        first = np.repeat(a - np.concatenate([[0], np.cumsum(n)[:-1]]), n)
        idx = first + np.arange(tot)
        delay = ts[rep] - ti[idx]
        bins = np.floor((delay - lo) / w).astype(np.int64)
        bins = bins[(bins >= 0) & (bins < nbins)]
        counts += np.bincount(bins, minlength=nbins)
    return CoincidenceHistogram(bin_width, edges_ps * PS, counts, min(signal.duration, idler.duration))


class UndefinedCARError(ArithmeticError):
    """No accidentals observed; only the lower bound ``CAR >= R_c + 1`` holds."""

    def __init__(self, coincidences):
        self.lower_bound = coincidences + 1
        super().__init__(f"CAR undefined with zero accidentals (CAR >= {self.lower_bound:g})")


def car(coincidences: float, accidentals: float) -> float:
    """Coincidence-to-accidental ratio ``(R_c + R_ac) / R_ac``."""
    if accidentals < 0 or coincidences < 0:
        raise DomainError("counts must be nonnegative")
    if accidentals == 0:
        raise UndefinedCARError(coincidences)
    return (coincidences + accidentals) / accidentals


def accidentals_per_bin(hist: CoincidenceHistogram, exclusion: float) -> float:
    """Mean bin content with ``|delay| > exclusion``."""
    far = np.abs(hist.centers) > exclusion
    if not far.any():
        raise DomainError("no histogram bins beyond the exclusion delay")
    return float(hist.counts[far].mean())


def histogram_car(hist: CoincidenceHistogram, window: float, exclusion: float):
    """``(R_c, R_ac, CAR)`` from a histogram.

    The coincidence window of width ``window`` is centred on the highest bin;
    accidentals are the far-bin mean scaled to the window's bin count.
    Raises :class:`UndefinedCARError` when no far-bin counts exist.
    """
    peak = hist.centers[int(np.argmax(hist.counts))]
    inside = np.abs(hist.centers - peak) <= window / 2
    total = float(hist.counts[inside].sum())
    r_ac = accidentals_per_bin(hist, exclusion) * int(inside.sum())
    r_c = total - r_ac
    return r_c, r_ac, car(max(r_c, 0.0), r_ac)


def expected_rates(source: SourceModel, chain_s: DetectionChain, chain_i: DetectionChain, window: float,
                   window_fraction: float = 1.0) -> dict:
    """Noise-free expectation of singles, true and accidental coincidence rates (1/s).

    ``window_fraction`` is the share of the delay density inside the window.
    """
    r = source.pair_rate
    s = r * chain_s.efficiency + chain_s.dark_rate
    i = r * chain_i.efficiency + chain_i.dark_rate
    true = r * chain_s.efficiency * chain_i.efficiency * window_fraction
    acc = s * i * window
    return {"singles_s": s, "singles_i": i, "coincidences": true, "accidentals": acc}


def estimate_brightness(detected_rate, chain_s: DetectionChain, chain_i: DetectionChain, linewidth, pump_mw):
    """Spectral brightness in pairs/(s mW MHz).

    The pair rate is ``R_detected / (d a1 a2 t1 t2 eta1 eta2)`` with ``d`` the
    signal arm's duty cycle; it is then divided by pump power and linewidth.
    """
    if not pump_mw > 0 or not linewidth > 0:
        raise DomainError("pump power and linewidth must be > 0")
    denom = (
        chain_s.duty_cycle
        * chain_s.collection
        * chain_i.collection
        * chain_s.filter
        * chain_i.filter
        * chain_s.detector
        * chain_i.detector
    )
    if denom <= 0:
        raise DomainError("zero efficiency in detection chain")
    return detected_rate / denom / pump_mw / (linewidth / 1e6)


def heralded_efficiency(coincidences: float, singles: float) -> float:
    if not singles > 0:
        raise DomainError("heralding singles must be > 0")
    return coincidences / singles

import numpy as np
import pytest
from scipy.constants import c
from hypothesis import given, settings, strategies as st

from cavityspdc.errors import DomainError
from cavityspdc.interference import (
    FransonConfig,
    MichelsonModel,
    UmiThermal,
    franson_coincidence,
    length_from_delay,
    michelson_intensity,
    michelson_visibility,
    net_visibility,
    umi_tuning_period,
    visibility_from_extrema,
)

NU0 = 193.4e12


def test_franson_destructive():
    assert franson_coincidence(FransonConfig(1.0), np.pi, 100.0) == pytest.approx(0.0, abs=1e-12)


def test_franson_shift_and_period():
    phi = np.linspace(0, 4 * np.pi, 8001)
    a = franson_coincidence(FransonConfig(0.87, 0.0), phi, 1.0)
    b = franson_coincidence(FransonConfig(0.87, np.pi / 4), phi, 1.0)
    assert np.allclose(b, franson_coincidence(FransonConfig(0.87, 0.0), phi + np.pi / 4, 1.0))
    assert np.allclose(a, franson_coincidence(FransonConfig(0.87, 0.0), phi + 2 * np.pi, 1.0))
    step = phi[1] - phi[0]
    shift = phi[np.argmax(a[:4000])] - phi[np.argmax(b[:4000])]
    assert (shift % (2 * np.pi)) == pytest.approx(np.pi / 4, abs=step)


def test_extrema_visibility():
    assert visibility_from_extrema(100, 0) == 1
    assert visibility_from_extrema(100, 100) == 0
    cmax, cmin = 1871.2, 128.8
    assert visibility_from_extrema(cmax, cmin) == pytest.approx(0.8712)
    # removing a constant accidental level raises the visibility
    acc = 16.48
    net = net_visibility(cmax, cmin, acc)
    assert net == pytest.approx(0.8858, abs=1e-3)
    assert net > 0.8712
    with pytest.raises(DomainError):
        net_visibility(100, 10, 20)


@settings(max_examples=50, deadline=None)
@given(hi=st.floats(1, 1e6), frac=st.floats(0, 1), k=st.floats(1e-3, 1e3))
def test_extrema_scale_invariance(hi, frac, k):
    lo = hi * frac
    assert visibility_from_extrema(k * hi, k * lo) == pytest.approx(visibility_from_extrema(hi, lo), abs=1e-12)


def test_michelson_intensity_limits():
    m = MichelsonModel(568.9e6, NU0)
    assert michelson_intensity(m, 0.0, 1.0) == pytest.approx(4.0)
    assert michelson_intensity(m, 1e3, 1.0) == pytest.approx(2.0, abs=1e-9)


def _extrema(linewidth, L, i0=1.0):
    # constructive and destructive fringe at the same L: carriers half a cycle apart
    k = np.round(NU0 * L / c)
    hi = michelson_intensity(MichelsonModel(linewidth, k * c / L), L, i0)
    lo = michelson_intensity(MichelsonModel(linewidth, (k + 0.5) * c / L), L, i0)
    return hi, lo


@pytest.mark.parametrize("L", [0.01, 0.1, 0.37])
def test_michelson_envelope_from_intensity(L):
    hi, lo = _extrema(568.9e6, L)
    assert hi - lo == pytest.approx(4 * np.exp(-np.pi * 568.9e6 * L / c), rel=1e-9)


@pytest.mark.parametrize("L", [0.0, 0.05, 0.2])
def test_visibility_matches_intensity_extrema_with_background(L):
    # background 2 I0 R / 2 added to both extrema: V = (max - min) / (max + min)
    m = MichelsonModel(568.9e6, NU0, 1 / 30)
    i0 = 1.0
    hi, lo = _extrema(568.9e6, L, i0) if L else (4 * i0, 0.0)
    bg = 2 * i0 * m.background / 2
    v = ((hi + bg) - (lo + bg)) / ((hi + bg) + (lo + bg))
    assert v == pytest.approx(michelson_visibility(m, L), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0, 10), b=st.floats(0, 10))
def test_visibility_monotone(a, b):
    m = MichelsonModel(568.9e6, NU0, 1 / 30)
    va, vb = michelson_visibility(m, a), michelson_visibility(m, b)
    assert 0 < va <= 1
    if a < b:
        assert va >= vb


def test_umi():
    umi = UmiThermal(0.811e-5, 1550e-9, length_difference=1.022)
    assert umi_tuning_period(umi) == pytest.approx(0.094, abs=0.001)
    assert umi_tuning_period(UmiThermal(0.811e-5, 1550e-9, 2.044)) == pytest.approx(umi_tuning_period(umi) / 2)
    assert length_from_delay(10e-9, 1.468) == pytest.approx(1.022, abs=0.001)
    assert UmiThermal(0.811e-5, delay=10e-9).arm_length == pytest.approx(1.0211, abs=1e-4)
    with pytest.raises(DomainError):
        UmiThermal(0.811e-5)
    with pytest.raises(DomainError):
        UmiThermal(0.811e-5, length_difference=2.0, delay=10e-9)

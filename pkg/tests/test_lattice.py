import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sawcrystal.errors import DegenerateGapError, DomainError, ParameterError
from sawcrystal.lattice import (
    LatticeSpec,
    band_gap,
    dispersion,
    find_qnms,
    half_trace,
    mode_frequency_2d,
    outgoing_condition,
    quality_factor,
    total_matrix,
    transverse_modes,
    unit_cell_matrix,
)

LAT = LatticeSpec()


def kronig_penney_half_trace(lattice, f):
    """Closed-form two-layer cell: cos(kP) = c1 c2 - (n1/n2 + n2/n1)/2 s1 s2."""
    w = 2 * np.pi * np.asarray(f)
    n2 = lattice.metal_index
    d2 = lattice.metallization * lattice.period
    d1 = lattice.period - d2
    p1 = w * d1 / lattice.speed
    p2 = w * n2 * d2 / lattice.speed
    return np.cos(p1) * np.cos(p2) - 0.5 * (1 / n2 + n2) * np.sin(p1) * np.sin(p2)


@pytest.fixture(scope="module")
def qnms():
    return {q.i: q for q in find_qnms(LAT, (3.15e9, 3.40e9))}


def test_defaults_and_derived():
    assert LAT.length == pytest.approx(133e-6)
    assert LAT.center_frequency == pytest.approx(3160 / 0.95e-6)
    assert LAT.effective_index == pytest.approx(1.013)
    assert LatticeSpec.from_electrical(0.95e-6, 140) == LAT


@pytest.mark.parametrize("kwargs", [dict(period=0), dict(cells=0), dict(cells=2.5),
                                    dict(metallization=1.0), dict(speed=-1),
                                    dict(speed_reduction=1.0), dict(aperture=0)])
def test_invalid_lattice(kwargs):
    with pytest.raises(ParameterError):
        LatticeSpec(**kwargs)


@settings(max_examples=60, deadline=None)
@given(f=st.floats(1e8, 1e10), delta=st.floats(0, 0.3), m=st.floats(0.05, 0.95))
def test_cell_matrix_unimodular(f, delta, m):
    lattice = LatticeSpec(metallization=m, speed_reduction=delta)
    cell = unit_cell_matrix(lattice, 2 * math.pi * f)
    assert np.linalg.det(cell) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(f=st.floats(1e8, 1e10), delta=st.floats(0, 0.3), m=st.floats(0.05, 0.95))
def test_half_trace_matches_closed_form(f, delta, m):
    lattice = LatticeSpec(metallization=m, speed_reduction=delta)
    got = half_trace(lattice, 2 * math.pi * f).real
    assert got == pytest.approx(kronig_penney_half_trace(lattice, f), abs=1e-10)


def test_zero_frequency_rejected():
    with pytest.raises(DomainError):
        unit_cell_matrix(LAT, 0.0)


def test_band_gap_against_fine_scan():
    # independent 10 kHz scan of |cos(kP)| > 1 with the closed-form cell
    t0 = time.perf_counter()
    lo, hi = band_gap(LAT)
    assert time.perf_counter() - t0 < 1.0
    f = np.arange(3.20e9, 3.36e9, 10e3)
    inside = f[np.abs(kronig_penney_half_trace(LAT, f)) > 1]
    assert lo == pytest.approx(inside[0], abs=10e3)
    assert hi == pytest.approx(inside[-1], abs=10e3)
    assert 30e6 < hi - lo < 45e6


def test_gap_closes_without_contrast():
    with pytest.raises(DegenerateGapError):
        band_gap(LatticeSpec(speed_reduction=0.0))


def test_gap_grows_with_contrast():
    widths = [np.diff(band_gap(LatticeSpec(speed_reduction=d)))[0] for d in (0.005, 0.01, 0.02)]
    assert widths[0] < widths[1] < widths[2]


def test_dispersion_satisfies_bloch_condition():
    k = np.linspace(0.9, 1.0, 21) * LAT.k_period
    acoustic, optical = dispersion(LAT, k)
    lo, hi = band_gap(LAT)
    assert np.all(acoustic.frequency <= lo * (1 + 1e-12))
    assert np.all(optical.frequency >= hi * (1 - 1e-12))
    for branch in (acoustic, optical):
        np.testing.assert_allclose(kronig_penney_half_trace(LAT, branch.frequency),
                                   np.cos(k * LAT.period), atol=1e-9)
    assert acoustic.frequency[-1] == pytest.approx(lo)
    assert optical.frequency[-1] == pytest.approx(hi)


def test_dispersion_is_linear_without_contrast():
    lattice = LatticeSpec(speed_reduction=0.0)
    k = np.linspace(0.5, 1.0, 11) * lattice.k_period
    acoustic, optical = dispersion(lattice, k)
    np.testing.assert_allclose(acoustic.frequency, lattice.speed * k / (2 * math.pi))
    assert optical.frequency[-1] == pytest.approx(acoustic.frequency[-1])


def test_dispersion_domain():
    with pytest.raises(DomainError):
        dispersion(LAT, [0.0])
    with pytest.raises(DomainError):
        dispersion(LAT, [1.1 * LAT.k_period])


def test_qnm_search_is_fast():
    t0 = time.perf_counter()
    find_qnms(LAT, (3.15e9, 3.40e9))
    assert time.perf_counter() - t0 < 10


def test_qnms_are_leaky_roots(qnms):
    for q in qnms.values():
        assert q.omega.imag < 0
        f, _, scale = outgoing_condition(LAT, q.omega, derivative=True)
        assert abs(f) / scale < 1e-9


def test_qnm_fields_are_outgoing_and_normalized(qnms):
    for q in qnms.values():
        k = q.omega / LAT.speed
        assert q.field_slope[0] == pytest.approx(-1j * k * q.field[0], rel=1e-6)
        assert q.field_slope[-1] == pytest.approx(1j * k * q.field[-1], rel=1e-6)
        assert np.trapezoid(np.abs(q.field) ** 2, q.x) / LAT.length == pytest.approx(1.0)


def test_qnm_fields_respect_mirror_symmetry(qnms):
    for q in qnms.values():
        np.testing.assert_allclose(np.abs(q.field), np.abs(q.field[::-1]), rtol=1e-7, atol=1e-9)


def test_ladder_brackets_the_gap(qnms):
    lo, hi = band_gap(LAT)
    assert qnms[0].frequency < lo < hi < qnms[1].frequency
    assert all(qnms[i].frequency < lo for i in qnms if i <= 0)
    assert all(qnms[i].frequency > hi for i in qnms if i >= 1)
    freqs = [qnms[i].frequency for i in sorted(qnms)]
    assert freqs == sorted(freqs)


def test_pairs_are_symmetric_about_gap_centre(qnms):
    centre = 0.5 * sum(band_gap(LAT))
    for i in (0, -1):
        mid = 0.5 * (qnms[i].frequency + qnms[1 - i].frequency)
        assert mid == pytest.approx(centre, abs=1e6)


def test_quality_factor_definitions_agree(qnms):
    for i in range(-3, 5):
        q = qnms[i]
        assert quality_factor(q, LAT) == pytest.approx(q.quality, rel=0.05)
    assert qnms[0].quality > qnms[-1].quality > qnms[-2].quality


def test_fabry_perot_slab_oracle():
    # contrast-free slab in a denser exterior: k L = p pi + i ln|r|
    lattice = LatticeSpec(speed_reduction=0.0, cells=40)
    n_ext = 2.0
    r = (1 - n_ext) / (1 + n_ext)
    v, length = lattice.speed, lattice.length
    # the window stops short of kx = pi/P, which has no ladder index
    found = find_qnms(lattice, (2.9e9, 3.29e9), exterior_index=n_ext)
    assert found
    for q in found:
        p = round(q.omega.real * length / (math.pi * v))
        expected = v * (p * math.pi + 1j * math.log(abs(r))) / length
        assert q.omega == pytest.approx(expected, rel=1e-9)


def test_total_matrix_is_power_of_cell():
    w = 2 * math.pi * 3.1e9
    small = LatticeSpec(cells=7)
    cell = unit_cell_matrix(small, w)
    np.testing.assert_allclose(total_matrix(small, w), np.linalg.matrix_power(cell, 7),
                               rtol=1e-10, atol=1e-12)


def test_transverse_orders():
    assert [t.j for t in transverse_modes(LAT)] == [1, 3]
    assert [t.j for t in transverse_modes(LatticeSpec(aperture=40e-6))][-1] > 3
    assert transverse_modes(LatticeSpec(speed_reduction=0.0)) == []


def test_transverse_profile_normalized():
    t = transverse_modes(LAT)[0]
    y = np.linspace(0, LAT.aperture, 2001)
    assert np.trapezoid(t.profile(y, LAT.aperture) ** 2, y) / LAT.aperture == pytest.approx(1.0)


def test_two_dimensional_frequency(qnms):
    t1, t3 = transverse_modes(LAT)
    q = qnms[0]
    assert mode_frequency_2d(q, t1) == pytest.approx(q.frequency * math.hypot(1, t1.ky / q.kx))
    split = mode_frequency_2d(q, t3) - mode_frequency_2d(q, t1)
    assert 17e6 < split < 33e6

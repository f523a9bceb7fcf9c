import math

import numpy as np
import pytest
from scipy import optimize

from sawcrystal import transmon as tmn
from sawcrystal.coupling import PiezoConstants
from sawcrystal.errors import ParameterError, PreconditionError
from sawcrystal.lattice import LatticeSpec
from sawcrystal.spectroscopy import (
    CoupledMode,
    DeviceAssembly,
    SweepSpec,
    build_device,
    simulate_map,
    simulate_trace,
)

TWO_PI = 2 * math.pi
TR = tmn.TransmonSpec()
LAT = LatticeSpec()


@pytest.fixture(scope="module")
def device():
    return build_device(LAT, TR)


def bare_device(modes=()):
    return DeviceAssembly(LAT, TR, PiezoConstants(), tuple(modes))


def single_mode(g_hz, f=3.262e9, q=1040, i=0):
    return CoupledMode(i, 1, f, q, LAT.k_period, 0.0, TWO_PI * g_hz)


def test_reference_device_modes(device):
    keys = {(m.i, m.j) for m in device.modes}
    assert {(-2, 1), (0, 1), (0, 3), (2, 1)} <= keys
    assert all(m.i % 2 == 0 and m.j in (1, 3) for m in device.modes)
    assert all(3.20e9 <= m.frequency <= 3.35e9 for m in device.modes)
    freqs = [m.frequency for m in device.modes]
    assert freqs == sorted(freqs)
    strongest = max(device.modes, key=lambda m: m.g)
    assert (strongest.i, strongest.j) == (0, 1)
    for m in device.modes:
        assert tmn.qubit_frequency(TR, m.flux) == pytest.approx(m.frequency)


def test_no_contrast_no_modes():
    assert build_device(LatticeSpec(speed_reduction=0.0), TR).modes == ()


def test_longer_period_moves_the_modes():
    lattice = LatticeSpec.from_electrical(1.1e-6, 140)
    dev = build_device(lattice, TR, window=(2.70e9, 2.95e9))
    strongest = max(dev.modes, key=lambda m: m.g)
    assert strongest.frequency == pytest.approx(lattice.center_frequency, rel=0.025)


def test_bare_atom_dip_depth():
    phi = tmn.flux_for_frequency(TR, 3.0e9)
    f = np.linspace(2.95e9, 3.05e9, 2001)
    t = simulate_trace(bare_device(), phi, f, drive_amplitude=TR.gamma1 / 1000)
    k = np.argmin(np.abs(t))
    assert f[k] == pytest.approx(3.0e9, abs=f[1] - f[0])
    assert 1 - abs(t[k]) == pytest.approx(TR.gamma1 / (2 * TR.gamma2), rel=0.005)


def test_far_detuned_atom_carries_the_mode_shift(device):
    # dip sits at the dressed pole w - wa - sum g^2 / (w - wm) = 0 near wa
    fa = 3.0e9
    phi = tmn.flux_for_frequency(TR, fa)
    f = np.linspace(2.90e9, 3.10e9, 8001)
    t = simulate_trace(device, phi, f, drive_amplitude=TR.gamma1 / 1000)
    fm = np.array([m.frequency for m in device.modes])
    g = np.array([m.g for m in device.modes]) / TWO_PI
    pole = optimize.brentq(lambda x: x - fa - np.sum(g**2 / (x - fm)), 2.9e9, 3.1e9)
    assert f[np.argmin(np.abs(t))] == pytest.approx(pole, abs=0.5e6)
    assert pole < fa


def test_resonant_doublet():
    g = 39e6
    dev = bare_device([single_mode(g)])
    phi = tmn.flux_for_frequency(TR, 3.262e9)
    f = np.linspace(3.16e9, 3.36e9, 8001)
    mag = np.abs(simulate_trace(dev, phi, f))
    lo = f[f < 3.262e9][np.argmin(mag[f < 3.262e9])]
    hi = f[f > 3.262e9][np.argmin(mag[f > 3.262e9])]
    assert hi - lo == pytest.approx(2 * g, rel=0.02)


def test_solvers_agree_without_modes():
    phi = tmn.flux_for_frequency(TR, 3.2e9)
    f = np.linspace(3.17e9, 3.23e9, 13)
    omega = TR.gamma1 / 20
    sc = simulate_trace(bare_device(), phi, f, omega, "semiclassical")
    ld = simulate_trace(bare_device(), phi, f, omega, "lindblad")
    # t differs by Gamma1 dS / Omega; compare dS on the Omega/Gamma2 scale
    ds = np.abs(sc - ld) * omega / TR.gamma1
    assert np.max(ds) / (omega / TR.gamma2) < 1e-3


def test_lindblad_trace_with_a_mode():
    dev = bare_device([single_mode(20e6)])
    phi = tmn.flux_for_frequency(TR, 3.262e9)
    f = np.linspace(3.23e9, 3.29e9, 7)
    sc = simulate_trace(dev, phi, f, TR.gamma1 / 1000)
    ld = simulate_trace(dev, phi, f, TR.gamma1 / 1000, "lindblad", n_max=2)
    np.testing.assert_allclose(ld, sc, atol=1e-4)


def test_trace_preconditions():
    f = np.linspace(3.2e9, 3.3e9, 5)
    with pytest.raises(PreconditionError):
        simulate_trace(bare_device(), 0.1, f, TR.gamma1)
    with pytest.raises(ParameterError):
        simulate_trace(bare_device(), 0.1, f, solver="exact")
    with pytest.raises(ParameterError):
        simulate_trace(bare_device(), 0.1, np.linspace(1e9, 2e9, 5))


def test_sweep_validation():
    with pytest.raises(ParameterError):
        SweepSpec([0.1], [3.2e9, 3.3e9])
    with pytest.raises(ParameterError):
        SweepSpec([0.2, 0.1], [3.2e9, 3.3e9])
    with pytest.raises(ParameterError):
        SweepSpec([0.1, 0.2], [3.2e9, 3.3e9], drive_amplitude=0)
    flux = np.array([0.1, 0.2])
    SweepSpec(flux, [3.2e9, 3.3e9])
    assert flux.flags.writeable


def test_covering_sweep():
    sw = SweepSpec.covering(TR, (3.20e9, 3.35e9))
    assert sw.flux.size == 201 and sw.frequency.size == 401
    fa = tmn.qubit_frequency(TR, sw.flux)
    assert fa[0] > 3.35e9 and fa[-1] < 3.20e9


def test_map_is_deterministic_across_threads(device):
    sw = SweepSpec.covering(TR, (3.20e9, 3.35e9), flux_points=41, f_points=101)
    a = simulate_map(device, sw, threads=1)
    b = simulate_map(device, sw, threads=8)
    assert a.tobytes() == b.tobytes()


def test_map_symmetric_in_flux(device):
    half = np.linspace(0.15, 0.21, 20)
    phi = np.concatenate([-half[::-1], half])
    sw = SweepSpec(phi, np.linspace(3.20e9, 3.35e9, 51))
    t = simulate_map(device, sw)
    np.testing.assert_array_equal(t, t[::-1])


def test_zero_coupling_map_follows_atom():
    sw = SweepSpec.covering(TR, (3.20e9, 3.35e9), flux_points=51, f_points=301)
    dev = bare_device([single_mode(0.0)])
    t = simulate_map(dev, sw)
    dips = sw.frequency[np.argmin(np.abs(t), axis=1)]
    fa = tmn.qubit_frequency(TR, sw.flux)
    inside = (fa > 3.20e9) & (fa < 3.35e9)
    step = sw.frequency[1] - sw.frequency[0]
    assert np.all(np.abs(dips[inside] - fa[inside]) <= step)
    np.testing.assert_allclose(t, simulate_map(bare_device(), sw), atol=1e-15)

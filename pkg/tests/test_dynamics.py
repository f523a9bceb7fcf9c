import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sawcrystal.dynamics import (
    SystemModel,
    lindblad_steady_state,
    linear_response,
    reflection,
    semiclassical_response,
)
from sawcrystal.errors import ParameterError, PreconditionError, ResourceError

TWO_PI = 2 * math.pi
WA = TWO_PI * 3.26e9
G1 = TWO_PI * 8e6
G2 = TWO_PI * 11e6
GPHI = G2 - G1 / 2


def bloch_sigma_minus(delta, omega, gamma1, gamma2):
    """Exact driven two-level steady state (optical Bloch equations)."""
    sat = omega**2 * gamma2 / (gamma1 * (gamma2**2 + delta**2))
    return -0.5j * omega / (gamma2 + 1j * delta) / (1 + sat)


def test_resonant_bare_atom_reflection():
    s = semiclassical_response(SystemModel(WA, G1, GPHI, (), WA, G1 / 1000))
    assert s.r == pytest.approx(G1 / (2 * G2), rel=1e-12)
    assert abs(s.t) == pytest.approx(1 - 8 / 22, rel=1e-12)
    assert s.r.real == pytest.approx(0.363636, rel=5e-3)


@pytest.mark.parametrize("omega_frac", [1e-3, 0.1, 1.0, 5.0])
@pytest.mark.parametrize("detuning", [0.0, 7e6, -20e6])
def test_lindblad_matches_bloch_solution(omega_frac, detuning):
    omega = G1 * omega_frac
    model = SystemModel(WA, G1, GPHI, (), WA - TWO_PI * detuning, omega)
    ss = lindblad_steady_state(model)
    expected = bloch_sigma_minus(TWO_PI * detuning, omega, G1, G2)
    assert ss.sigma_minus == pytest.approx(expected, rel=1e-9, abs=1e-12 * omega / G2)


@settings(max_examples=50, deadline=None)
@given(g=st.floats(1e6, 60e6), dm=st.floats(-30e6, 30e6), dd=st.floats(-100e6, 100e6),
       q=st.floats(200, 3000))
def test_linear_response_closed_form(g, dm, dd, q):
    wm = WA + TWO_PI * dm
    wd = WA + TWO_PI * dd
    kappa = wm / q
    s, b = linear_response(WA, G2, [wm], [kappa], [TWO_PI * g], wd)
    den = 1j * (WA - wd) + G2 + (TWO_PI * g) ** 2 / (1j * (wm - wd) + kappa / 2)
    assert complex(s) == pytest.approx(-0.5j / den, rel=1e-10)
    r, t = reflection(complex(s) * G1, G1, G1)
    # passive scatterer: no gain
    assert abs(r) ** 2 + abs(t) ** 2 <= 1 + 1e-12


def test_vacuum_rabi_doublet():
    # resonant 2x2 block: eigenfrequencies at omega_a +- g
    g = TWO_PI * 39e6
    f = np.linspace(3.16e9, 3.36e9, 40001)
    s, _ = linear_response(WA, G2, [WA], [WA / 1040], [g], TWO_PI * f)
    mag = np.abs(1 - 1j * G1 * s)
    lower = f[f < 3.26e9][np.argmin(mag[f < 3.26e9])]
    upper = f[f > 3.26e9][np.argmin(mag[f > 3.26e9])]
    eig = np.linalg.eigvalsh(np.array([[WA, g], [g, WA]])) / TWO_PI
    assert lower == pytest.approx(eig[0], abs=1e6)
    assert upper == pytest.approx(eig[1], abs=1e6)
    assert upper - lower == pytest.approx(2 * 39e6, rel=0.02)


def test_lindblad_agrees_with_weak_drive_closure():
    modes = ((WA + TWO_PI * 5e6, WA / 1000, TWO_PI * 20e6), (WA - TWO_PI * 12e6, WA / 500, TWO_PI * 9e6))
    for wd in WA + TWO_PI * np.array([-25e6, -3e6, 0.0, 4e6, 30e6]):
        model = SystemModel(WA, G1, GPHI, modes, wd, G1 / 1000)
        sc = semiclassical_response(model)
        ld = lindblad_steady_state(model)
        scale = model.drive_amplitude / G2
        assert abs(ld.sigma_minus - sc.sigma_minus) < 1e-5 * scale
        np.testing.assert_allclose(ld.mode_amplitudes, sc.mode_amplitudes,
                                   atol=1e-5 * scale)


def test_truncation_converged():
    modes = ((WA, WA / 1000, TWO_PI * 30e6),)
    model = SystemModel(WA, G1, GPHI, modes, WA + TWO_PI * 10e6, G1 / 10)
    s2 = lindblad_steady_state(model, n_max=2).sigma_minus
    s3 = lindblad_steady_state(model, n_max=3).sigma_minus
    assert abs(s3 - s2) < 1e-4 * model.drive_amplitude / G2


def test_density_matrix_is_physical():
    modes = ((WA, WA / 1000, TWO_PI * 30e6),)
    ss = lindblad_steady_state(SystemModel(WA, G1, GPHI, modes, WA, G1))
    rho = ss.rho
    assert np.trace(rho).real == pytest.approx(1.0)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_dimension_cap():
    modes = tuple((WA, WA / 1000, TWO_PI * 1e6) for _ in range(9))
    with pytest.raises(ResourceError):
        lindblad_steady_state(SystemModel(WA, G1, GPHI, modes, WA), n_max=2)


def test_preconditions():
    with pytest.raises(PreconditionError):
        semiclassical_response(SystemModel(WA, G1, GPHI, (), WA, G1))
    with pytest.raises(ParameterError):
        SystemModel(WA, G1, GPHI, (), 0.8 * WA)
    with pytest.raises(ParameterError):
        SystemModel(WA, 0.0, GPHI, (), WA)
    with pytest.raises(ParameterError):
        SystemModel(WA, G1, GPHI, ((WA, 0.0, 1.0),), WA)
    with pytest.raises(ParameterError):
        lindblad_steady_state(SystemModel(WA, G1, GPHI, (), WA), n_max=0)


def test_batched_shapes():
    wd = WA + TWO_PI * np.linspace(-1e7, 1e7, 6).reshape(2, 3)
    s, b = linear_response(WA, G2, [WA, WA + 1e7], [1e6, 1e6], [1e7, 2e7], wd)
    assert s.shape == (2, 3)
    assert b.shape == (2, 3, 2)

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import constants

from sawcrystal.errors import DomainError, ParameterError
from sawcrystal.transmon import (
    TransmonSpec,
    ej_at_flux,
    flux_for_frequency,
    matrix_element_xi0,
    qubit_frequency,
    reduced_flux,
)

TR = TransmonSpec()


def test_sweet_spot_frequency():
    ec = 0.78e9 / 4
    assert qubit_frequency(TR, 0.0) == pytest.approx(math.sqrt(8 * ec * 9.6e9) - ec)
    assert TR.max_frequency == pytest.approx(3.6749e9, rel=1e-4)


def test_pair_convention_uses_ec_pair():
    tr = TransmonSpec(ec_convention="pair")
    assert tr.ec == 0.78e9
    assert qubit_frequency(tr, 0.0) == pytest.approx(math.sqrt(8 * 0.78e9 * 9.6e9) - 0.78e9)


@settings(max_examples=200)
@given(st.floats(-20, 20, allow_nan=False))
def test_even_and_periodic(phi):
    assume(abs(phi - round(phi)) < 0.45)
    assert qubit_frequency(TR, phi) == qubit_frequency(TR, -phi)
    assert qubit_frequency(TR, phi) == pytest.approx(qubit_frequency(TR, phi + 1), rel=1e-12)


@settings(max_examples=200)
@given(st.floats(0.5e9, 3.6e9))
def test_flux_inverse(f):
    phi = flux_for_frequency(TR, f)
    assert 0 <= phi < 0.5
    assert qubit_frequency(TR, phi) == pytest.approx(f, rel=1e-10)


def test_monotone_on_half_period():
    phi = np.linspace(0, 0.45, 200)
    assert np.all(np.diff(qubit_frequency(TR, phi)) < 0)


def test_half_flux_leaves_transmon_regime():
    with pytest.raises(DomainError):
        qubit_frequency(TR, 0.5)
    with pytest.raises(DomainError):
        flux_for_frequency(TR, 4e9)


def test_reduced_flux():
    np.testing.assert_allclose(reduced_flux([0.2, -0.2, 1.2, 0.8, 3.5]), [0.2, 0.2, 0.2, 0.2, 0.5])
    assert ej_at_flux(TR, 0.25) == pytest.approx(9.6e9 * math.cos(math.pi / 4))


def test_matrix_element_value():
    ec = constants.h * 0.78e9 / 4
    ej = constants.h * 9.6e9
    assert matrix_element_xi0(TR) == pytest.approx((2 * ec) ** 0.75 * ej**0.25 / constants.e)
    # decreases slowly away from the sweet spot, like EJ^(1/4)
    ratio = matrix_element_xi0(TR, 0.2) / matrix_element_xi0(TR)
    assert ratio == pytest.approx(math.cos(0.2 * math.pi) ** 0.25)


@pytest.mark.parametrize("kwargs", [dict(ec_pair=0), dict(ej_max=0.5e9), dict(c_q=0),
                                    dict(gamma1=0), dict(gamma2=1.0), dict(ec_convention="x")])
def test_invalid(kwargs):
    with pytest.raises(ParameterError):
        TransmonSpec(**kwargs)


def test_rates():
    assert TR.gamma2 == pytest.approx(2 * math.pi * 11e6)
    assert TR.gamma_phi == pytest.approx(2 * math.pi * 7e6)

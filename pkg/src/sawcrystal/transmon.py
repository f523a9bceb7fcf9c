"""Flux-tunable transmon: transition frequency, charge matrix element, rates.

Energies are given in frequency units (E/h, Hz); rates are angular (rad/s).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import DomainError, ParameterError

CONVENTIONS = ("single", "pair")


@dataclass(frozen=True)
class TransmonSpec:
    """Artificial atom parameters.

    ``ec_pair`` is the Cooper-pair charging energy ``(2e)^2 / 2C``.  With the
    default ``ec_convention="single"`` both the frequency law and the matrix
    element use the single-electron energy ``ec_pair / 4``; ``"pair"`` feeds
    ``ec_pair`` to both formulas unchanged.
    """

    ej_max: float = 9.6e9
    ec_pair: float = 0.78e9
    c_q: float = 83e-15
    c_g: float = 14e-15
    gamma1: float = 2 * math.pi * 8e6
    gamma2: float = 2 * math.pi * 11e6
    ec_convention: str = "single"

    def __post_init__(self):
        if not self.ec_pair > 0:
            raise ParameterError("ec_pair must be positive")
        if not self.ej_max > self.ec_pair:
            raise ParameterError("transmon regime requires ej_max > ec_pair")
        if not (self.c_q > 0 and self.c_g > 0):
            raise ParameterError("capacitances must be positive")
        if not self.gamma1 > 0:
            raise ParameterError("gamma1 must be positive")
        if self.gamma2 < self.gamma1 / 2:
            raise ParameterError("gamma2 must be at least gamma1 / 2")
        if self.ec_convention not in CONVENTIONS:
            raise ParameterError(f"ec_convention must be one of {CONVENTIONS}")

    @property
    def ec(self):
        """Charging energy (Hz) entering the transmon formulas."""
        return self.ec_pair / 4 if self.ec_convention == "single" else self.ec_pair

    @property
    def gamma_phi(self):
        return self.gamma2 - self.gamma1 / 2

    @property
    def c_idt(self):
        return self.c_q

    @property
    def max_frequency(self):
        return math.sqrt(8 * self.ec * self.ej_max) - self.ec


def reduced_flux(phi):
    """Distance of ``phi`` to the nearest integer, in ``[0, 1/2]``.

    ``phi - round(phi)`` is exact in floating point, so the result is
    bit-identical for ``phi`` and ``-phi``.
    """
    phi = np.asarray(phi, dtype=float)
    return np.abs(phi - np.round(phi))


def canonical_flux(phi):
    """Representative of ``phi`` in ``[0, 1)``."""
    return np.mod(phi, 1.0)


def ej_at_flux(spec, phi):
    """Josephson energy of the symmetric SQUID, ``EJ_max |cos(pi phi)|``."""
    out = spec.ej_max * np.cos(np.pi * reduced_flux(phi))
    return float(out) if np.ndim(out) == 0 else out


def qubit_frequency(spec, phi):
    """``sqrt(8 Ec EJ(phi)) - Ec`` in Hz; raises outside the transmon regime."""
    ej = np.asarray(ej_at_flux(spec, phi))
    if np.any(ej <= spec.ec):
        raise DomainError(f"EJ(phi) <= Ec: flux {phi!r} leaves the transmon regime")
    out = np.sqrt(8 * spec.ec * ej) - spec.ec
    return float(out) if out.ndim == 0 else out


def flux_for_frequency(spec, frequency):
    """Flux in ``[0, 1/2)`` at which the qubit sits at ``frequency``."""
    frequency = np.asarray(frequency, dtype=float)
    if np.any(frequency > spec.max_frequency) or np.any(frequency <= 0):
        raise DomainError(f"frequency {frequency!r} Hz is outside the tunable range "
                          f"(0, {spec.max_frequency:.6g}]")
    ej = (frequency + spec.ec) ** 2 / (8 * spec.ec)
    out = np.arccos(np.clip(ej / spec.ej_max, -1.0, 1.0)) / np.pi
    return float(out) if out.ndim == 0 else out


def matrix_element_xi0(spec, phi=0.0):
    """Charge matrix element ``(2 Ec)^(3/4) EJ(phi)^(1/4) / e`` in volts."""
    ec = spec.ec * constants.h
    ej = ej_at_flux(spec, phi) * constants.h
    return (2 * ec) ** 0.75 * np.asarray(ej) ** 0.25 / constants.e

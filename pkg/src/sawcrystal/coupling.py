"""Potential induced on the IDT by a mode and the resulting atom-mode coupling.

The electrodes are the lattice stripes themselves: stripe ``n`` is centred at
``(n + 1/2) P`` and has polarity ``(-1)**n``, so the polarity pattern repeats
with the electrical period ``a = 2P``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import DomainError, ParameterError, PreconditionError


@dataclass(frozen=True)
class ElectrodeGeometry:
    electrical_period: float
    electrode_width: float
    pairs: int

    def __post_init__(self):
        if not 0 < self.electrode_width < self.electrical_period / 2:
            raise ParameterError("electrode width must lie in (0, a/2)")
        if self.pairs < 1:
            raise ParameterError("pairs must be >= 1")

    @classmethod
    def from_lattice(cls, lattice):
        return cls(lattice.electrical_period, lattice.metallization * lattice.period,
                   lattice.pairs)

    @property
    def length(self):
        return self.pairs * self.electrical_period

    @property
    def metallization(self):
        return 2 * self.electrode_width / self.electrical_period


@dataclass(frozen=True)
class PiezoConstants:
    """``epz_over_eps`` in V/m and quartz mass density in kg/m^3."""

    epz_over_eps: float = 1.6e9
    density: float = 2650.0

    def __post_init__(self):
        if not (self.epz_over_eps > 0 and self.density > 0):
            raise ParameterError("piezo constants must be positive")


@dataclass(frozen=True)
class ModeCoupling:
    i: int
    j: int
    potential: float
    g: float


def zero_point_displacement(lattice, piezo):
    """``z0 = sqrt(hbar / (2 rho W L v))``."""
    return math.sqrt(constants.hbar / (2 * piezo.density * lattice.aperture
                                       * lattice.length * lattice.speed))


def electrode_function(geom, x):
    """Electrode polarity ``p_e(x)``: +1, -1 on alternating stripes, 0 in gaps."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > geom.length):
        raise DomainError("x outside the electrode structure [0, L]")
    pitch = geom.electrical_period / 2
    n = np.minimum(np.floor(x / pitch), 2 * geom.pairs - 1)
    centre = (n + 0.5) * pitch
    inside = np.abs(x - centre) <= geom.electrode_width / 2
    out = np.where(inside, np.where(n % 2 == 0, 1.0, -1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def sampled_electrodes(geom, npoints):
    """``p_e`` on the uniform grid of ``npoints`` nodes spanning ``[0, L]``.

    Electrode edges are snapped inwards to grid nodes, symmetrically within
    each stripe, so the sampled pattern keeps the mirror symmetry of the
    structure and never leaks polarity into the gaps.
    """
    stripes = 2 * geom.pairs
    if (npoints - 1) % stripes:
        raise PreconditionError(f"grid of {npoints} nodes is not commensurate with {stripes} stripes")
    per = (npoints - 1) // stripes
    first = math.ceil(per * (1 - geom.metallization) / 2 - 1e-9)
    k = np.arange(npoints)
    stripe = np.minimum(k // per, stripes - 1)
    local = k - stripe * per
    inside = (local >= first) & (local <= per - first)
    return np.where(inside, np.where(stripe % 2 == 0, 1.0, -1.0), 0.0)


def _check_normalized(x, field, length, rtol=1e-6):
    norm = np.trapezoid(np.abs(field) ** 2, x) / length
    if abs(norm - 1) > rtol:
        raise PreconditionError(f"field is not normalized: (1/L) int |A|^2 dx = {norm:.9g}")


def electrode_overlap(x, field, geom):
    """``int A p_e dx`` on the field grid (trapezoid rule)."""
    return complex(np.trapezoid(np.asarray(field) * sampled_electrodes(geom, len(x)), x))


def align_phase(x, field, geom):
    """Rotate ``field`` so that its electrode overlap is real and non-negative."""
    ov = electrode_overlap(x, field, geom)
    if ov == 0:
        return np.asarray(field)
    return np.asarray(field) * (abs(ov) / ov)


def overlap_potential(x, field, geom, j, z0, piezo):
    """Potential ``V_ij`` (V) induced on the IDT by mode ``A_i(x) A_j(y)``."""
    if j < 1:
        raise DomainError("transverse index must be a positive integer")
    _check_normalized(x, field, geom.length)
    if j % 2 == 0:
        return 0.0
    pe = sampled_electrodes(geom, len(x))
    numerator = abs(np.trapezoid(np.asarray(field) * pe, x))
    denominator = 0.5 * np.trapezoid(np.abs(pe), x)
    transverse = 2 * math.sqrt(2) / (j * math.pi)
    return piezo.epz_over_eps * z0 * transverse * numerator / denominator


def coupling_strength(xi0, c_idt, potential):
    """``g = xi0 C_IDT V / hbar`` in rad/s."""
    if xi0 < 0 or c_idt < 0 or potential < 0:
        raise DomainError("coupling inputs must be non-negative")
    return xi0 * c_idt * potential / constants.hbar

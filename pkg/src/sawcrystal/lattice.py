"""Phononic crystal of metal stripes: Bloch bands, stop band and quasinormal modes.

The crystal is treated as a scalar wave ``u'' + (w n(x) / v)**2 u = 0`` with a
piecewise-constant index: ``n = 1`` on the free surface and ``n = 1/(1 - delta)``
under a stripe.  Amplitude and slope are continuous at every interface, so a
homogeneous segment acts on the state vector ``(u, u')`` through a unimodular
2x2 matrix.  One lattice cell is laid out symmetrically as
``[free gap / 2 | metal | free gap / 2]``; the finite crystal of ``N`` cells is
therefore mirror symmetric, which is what makes the parity selection rules of
the atom coupling exact.

Quasinormal modes are complex frequencies at which the finite crystal supports
a solution that is purely outgoing on both sides.
"""

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import optimize

from .errors import (
    DegenerateGapError,
    DomainError,
    IndexCollisionError,
    NumericalError,
    ParameterError,
)

logger = logging.getLogger(__name__)

SAMPLES_PER_CELL = 32


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and acoustics of the stripe lattice.

    Parameters
    ----------
    period : float
        Mechanical period ``P`` in m (one stripe per period).
    cells : int
        Number of periods ``N``.
    metallization : float
        Fraction of a period covered by metal.
    speed : float
        SAW speed on the free surface, m/s.
    speed_reduction : float
        Fractional slowdown of the SAW under a stripe.
    aperture : float
        Stripe length ``W`` (transverse size of the crystal), m.
    """

    period: float = 0.475e-6
    cells: int = 280
    metallization: float = 0.65
    speed: float = 3160.0
    speed_reduction: float = 0.02
    aperture: float = 12e-6

    def __post_init__(self):
        if not self.period > 0:
            raise ParameterError(f"period must be positive, got {self.period}")
        if int(self.cells) != self.cells or self.cells < 1:
            raise ParameterError(f"cells must be a positive integer, got {self.cells}")
        if not 0 < self.metallization < 1:
            raise ParameterError(f"metallization must lie in (0, 1), got {self.metallization}")
        if not self.speed > 0:
            raise ParameterError(f"speed must be positive, got {self.speed}")
        if not 0 <= self.speed_reduction < 1:
            raise ParameterError(f"speed_reduction must lie in [0, 1), got {self.speed_reduction}")
        if not self.aperture > 0:
            raise ParameterError(f"aperture must be positive, got {self.aperture}")

    @classmethod
    def from_electrical(cls, electrical_period, pairs, **kwargs):
        """Build from the IDT electrical period ``a`` and pair count ``N_p``."""
        return cls(period=electrical_period / 2, cells=2 * int(pairs), **kwargs)

    @property
    def length(self):
        return self.cells * self.period

    @property
    def electrical_period(self):
        return 2 * self.period

    @property
    def pairs(self):
        return self.cells // 2

    @property
    def center_frequency(self):
        """``f_ac = v / a``."""
        return self.speed / self.electrical_period

    @property
    def metal_index(self):
        return 1.0 / (1.0 - self.speed_reduction)

    @property
    def effective_index(self):
        # linear fill-factor mixing of the slowdown
        return 1.0 + self.metallization * self.speed_reduction

    @property
    def k_period(self):
        return math.pi / self.period

    @property
    def k_length(self):
        return math.pi / self.length

    def segments(self):
        """``(index, length)`` of the three homogeneous pieces of one cell."""
        gap = (1.0 - self.metallization) * self.period / 2
        return (
            (1.0, gap),
            (self.metal_index, self.metallization * self.period),
            (1.0, gap),
        )


@dataclass(frozen=True)
class DispersionBranch:
    label: str
    k: np.ndarray
    frequency: np.ndarray


@dataclass(frozen=True, eq=False)
class QuasiNormalMode:
    """A leaky resonance of the finite crystal.

    ``field`` holds ``A_i(x)`` on the uniform grid ``x`` (normalized so that
    the mean of ``|A|**2`` over the crystal is one) and ``field_slope`` its
    x-derivative, needed for the stored-energy integral.
    """

    i: int
    omega: complex
    kx: float
    x: np.ndarray = dc_field(repr=False)
    field: np.ndarray = dc_field(repr=False)
    field_slope: np.ndarray = dc_field(repr=False)
    j: int = 1
    exterior_index: float = 1.0

    @property
    def frequency(self):
        return self.omega.real / (2 * math.pi)

    @property
    def quality(self):
        return self.omega.real / (2 * abs(self.omega.imag))


@dataclass(frozen=True)
class TransverseMode:
    j: int
    ky: float
    amplitude: float = math.sqrt(2.0)

    def profile(self, y, aperture):
        return self.amplitude * np.sin(self.j * math.pi * np.asarray(y) / aperture)


# ---------------------------------------------------------------------------
# transfer matrices


def _segment(omega, index, length, speed, derivative=False):
    omega = np.asarray(omega, dtype=complex)
    q = omega * index / speed
    c = np.cos(q * length)
    s = np.sin(q * length)
    m = np.empty(omega.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 0, 1] = s / q
    m[..., 1, 0] = -q * s
    m[..., 1, 1] = c
    if not derivative:
        return m
    dq = index / speed
    dm = np.empty_like(m)
    dm[..., 0, 0] = -length * s * dq
    dm[..., 0, 1] = (length * c / q - s / q**2) * dq
    dm[..., 1, 0] = (-s - q * length * c) * dq
    dm[..., 1, 1] = -length * s * dq
    return m, dm


def _cell(lattice, omega, derivative=False):
    m = None
    dm = None
    for index, length in lattice.segments():
        if derivative:
            s, ds = _segment(omega, index, length, lattice.speed, derivative=True)
            if m is None:
                m, dm = s, ds
            else:
                m, dm = s @ m, ds @ m + s @ dm
        else:
            s = _segment(omega, index, length, lattice.speed)
            m = s if m is None else s @ m
    return (m, dm) if derivative else m


def unit_cell_matrix(lattice, omega):
    """Transfer matrix of one lattice cell acting on ``(u, u')``.

    Accepts scalar or array ``omega`` (rad/s, may be complex); arrays give a
    stack of matrices with shape ``omega.shape + (2, 2)``.
    """
    if not isinstance(lattice, LatticeSpec):
        raise ParameterError("lattice must be a LatticeSpec")
    omega = np.asarray(omega, dtype=complex)
    if np.any(omega == 0):
        raise DomainError("unit cell matrix undefined at omega = 0")
    return _cell(lattice, omega)


def half_trace(lattice, omega):
    """``Tr M_cell / 2``; real for real frequency."""
    return 0.5 * np.trace(unit_cell_matrix(lattice, omega), axis1=-2, axis2=-1)


def _power(m, dm, n):
    eye = np.broadcast_to(np.eye(2, dtype=complex), m.shape).copy()
    res, dres = eye, np.zeros_like(m)
    base, dbase = m, dm
    while n:
        if n & 1:
            res, dres = base @ res, dbase @ res + base @ dres
        n >>= 1
        if n:
            base, dbase = base @ base, dbase @ base + base @ dbase
    return res, dres


def total_matrix(lattice, omega, derivative=False):
    """Transfer matrix of the whole crystal (and its omega-derivative)."""
    m, dm = _cell(lattice, np.asarray(omega, dtype=complex), derivative=True)
    res, dres = _power(m, dm, lattice.cells)
    return (res, dres) if derivative else res


def outgoing_condition(lattice, omega, exterior_index=1.0, derivative=False):
    """Boundary function whose zeros are the quasinormal modes.

    With ``k`` the exterior wavenumber, the state ``(1, -ik)`` leaving the left
    edge must arrive at the right edge proportional to ``(1, ik)``.
    """
    omega = np.asarray(omega, dtype=complex)
    m, dm = total_matrix(lattice, omega, derivative=True)
    k = omega * exterior_index / lattice.speed
    dk = exterior_index / lattice.speed
    m11, m12, m21, m22 = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    f = 1j * k * (m11 + m22) + k**2 * m12 - m21
    if not derivative:
        return f
    d11, d12, d21, d22 = dm[..., 0, 0], dm[..., 0, 1], dm[..., 1, 0], dm[..., 1, 1]
    df = (
        1j * dk * (m11 + m22)
        + 1j * k * (d11 + d22)
        + 2 * k * dk * m12
        + k**2 * d12
        - d21
    )
    scale = np.abs(k) * (np.abs(m11) + np.abs(m22)) + np.abs(k) ** 2 * np.abs(m12) + np.abs(m21)
    return f, df, scale


# ---------------------------------------------------------------------------
# Bloch bands


def _band_edges(lattice):
    """Edges of the first stop band; equal for a contrast-free lattice."""
    n_avg = 1.0 + lattice.metallization * (lattice.metal_index - 1.0)
    f_guess = lattice.speed / (2 * lattice.period * n_avg)
    if lattice.speed_reduction == 0:
        return f_guess, f_guess

    def ht(f):
        return float(half_trace(lattice, 2 * math.pi * f).real)

    width = 0.1
    while True:
        lo, hi = f_guess * (1 - width), f_guess * (1 + width)
        if ht(lo) > -1 and ht(hi) > -1:
            break
        width *= 1.5
        if width > 0.9:
            raise NumericalError("could not bracket the first stop band")
    res = optimize.minimize_scalar(ht, bounds=(lo, hi), method="bounded",
                                   options={"xatol": f_guess * 1e-13})
    f_min = res.x
    if ht(f_min) >= -1:
        raise DegenerateGapError("no stop band resolved near the zone edge")
    f_low = optimize.brentq(lambda f: ht(f) + 1, lo, f_min, xtol=1e-3, rtol=1e-15)
    f_high = optimize.brentq(lambda f: ht(f) + 1, f_min, hi, xtol=1e-3, rtol=1e-15)
    return f_low, f_high


def band_gap(lattice):
    """First stop band ``(f_low, f_high)`` in Hz."""
    if lattice.speed_reduction == 0:
        raise DegenerateGapError("speed_reduction = 0: lattice has no contrast and no gap")
    return _band_edges(lattice)


def dispersion(lattice, k_grid):
    """Acoustic and optical Bloch branches adjacent to the first stop band.

    ``k_grid`` must lie in ``(0, pi/P]``.  Each frequency solves
    ``cos(k P) = Tr M_cell / 2`` by bracketed root finding.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    kp = lattice.k_period
    if np.any(k_grid <= 0) or np.any(k_grid > kp * (1 + 1e-12)):
        raise DomainError("k_grid values must lie in (0, pi/P]")
    f_low, f_high = _band_edges(lattice)
    v = lattice.speed

    if lattice.speed_reduction == 0:
        acoustic = v * k_grid / (2 * math.pi)
        optical = v * (2 * kp - k_grid) / (2 * math.pi)
        return [DispersionBranch("acoustic", k_grid, acoustic),
                DispersionBranch("optical", k_grid, optical)]

    def ht(f):
        return float(half_trace(lattice, 2 * math.pi * f).real)

    f_scan = np.linspace(f_high, 2 * f_high, 4001)
    ht_scan = half_trace(lattice, 2 * math.pi * f_scan).real

    acoustic = np.empty_like(k_grid)
    optical = np.empty_like(k_grid)
    for n, k in enumerate(k_grid):
        target = math.cos(k * lattice.period)
        try:
            if target <= -1:
                acoustic[n], optical[n] = f_low, f_high
                continue
            acoustic[n] = optimize.brentq(lambda f: ht(f) - target, f_low * 1e-6, f_low,
                                          xtol=1e-6, rtol=1e-15)
            above = np.nonzero(ht_scan >= target)[0]
            if above.size == 0:
                raise ValueError("optical branch not bracketed")
            top = f_scan[above[0]]
            optical[n] = optimize.brentq(lambda f: ht(f) - target, f_high, top,
                                         xtol=1e-6, rtol=1e-15)
        except ValueError as exc:
            raise NumericalError(f"dispersion root bracketing failed at k = {k!r} rad/m: {exc}")
    return [DispersionBranch("acoustic", k_grid, acoustic),
            DispersionBranch("optical", k_grid, optical)]


# ---------------------------------------------------------------------------
# quasinormal modes


def _newton(lattice, omega, exterior_index, tol=1e-15, max_iter=100):
    f, df, scale = outgoing_condition(lattice, omega, exterior_index, derivative=True)
    for _ in range(max_iter):
        step = f / df
        trial = omega - step
        ft, dft, st = outgoing_condition(lattice, trial, exterior_index, derivative=True)
        damp = 1.0
        while abs(ft) > abs(f) and damp > 1e-4:
            damp /= 2
            trial = omega - damp * step
            ft, dft, st = outgoing_condition(lattice, trial, exterior_index, derivative=True)
        omega, f, df, scale = trial, ft, dft, st
        if abs(damp * step) <= tol * abs(omega):
            break
    return complex(omega), float(abs(f) / scale)


def _mode_samples(lattice, omega, exterior_index, samples_per_cell):
    """``u`` and ``u'`` on the uniform grid for an outgoing-left solution."""
    k_out = omega * exterior_index / lattice.speed
    pieces = lattice.segments()
    starts = np.cumsum([0.0] + [length for _, length in pieces])[:-1]
    cell_states = np.empty((lattice.cells, 3, 2), dtype=complex)
    state = np.array([1.0, -1j * k_out])
    mats = [_segment(omega, index, length, lattice.speed) for index, length in pieces]
    for c in range(lattice.cells):
        for s, mat in enumerate(mats):
            cell_states[c, s] = state
            state = mat @ state

    npts = lattice.cells * samples_per_cell + 1
    idx = np.arange(npts)
    x = idx * (lattice.period / samples_per_cell)
    cell = np.minimum(idx // samples_per_cell, lattice.cells - 1)
    local = (idx - cell * samples_per_cell) * (lattice.period / samples_per_cell)
    seg = np.searchsorted(starts, local, side="right") - 1
    # put interface nodes on the segment that ends there; values agree either way
    seg = np.clip(seg, 0, 2)
    index = np.array([p[0] for p in pieces])[seg]
    q = omega * index / lattice.speed
    dx = local - starts[seg]
    u0 = cell_states[cell, seg, 0]
    du0 = cell_states[cell, seg, 1]
    c, s = np.cos(q * dx), np.sin(q * dx)
    u = u0 * c + du0 * s / q
    du = -u0 * q * s + du0 * c
    return x, u, du


def _ladder_index(lattice, omega, f_mid):
    kp, kl = lattice.k_period, lattice.k_length
    theta = np.arccos(complex(half_trace(lattice, omega)))
    k_fold = abs(theta.real) / lattice.period
    if omega.real / (2 * math.pi) < f_mid:
        kx = k_fold
        i = int(round((kx - kp) / kl)) + 1
        if i > 0:
            i = 0
    else:
        kx = 2 * kp - k_fold
        i = int(round((kx - kp) / kl))
        if i < 1:
            i = 1
    return i, ladder_kx(lattice, i)


def ladder_kx(lattice, i):
    """Longitudinal wavevector assigned to index ``i``; ``k_P`` itself is skipped."""
    kp, kl = lattice.k_period, lattice.k_length
    return kp + i * kl if i > 0 else kp + (i - 1) * kl


def mode_from_frequency(lattice, omega, i=0, exterior_index=1.0,
                        samples_per_cell=SAMPLES_PER_CELL):
    """Sample and normalize the field of a (polished) complex frequency."""
    x, u, du = _mode_samples(lattice, omega, exterior_index, samples_per_cell)
    norm = math.sqrt(np.trapezoid(np.abs(u) ** 2, x) / lattice.length)
    return QuasiNormalMode(i=i, omega=complex(omega), kx=ladder_kx(lattice, i), x=x,
                           field=u / norm, field_slope=du / norm,
                           exterior_index=exterior_index)


def find_qnms(lattice, f_window, exterior_index=1.0, samples_per_cell=SAMPLES_PER_CELL,
              residual_tol=1e-9):
    """Quasinormal modes whose frequency lies in ``f_window = (f_min, f_max)``.

    Seeds are the real-axis minima of the outgoing-boundary function on a grid
    finer than a quarter of the Fabry-Perot spacing ``v/(2L)``; each seed is
    polished by damped complex Newton iteration with the analytic derivative.
    Modes are returned sorted by frequency.

    ``exterior_index`` sets the index of the medium outside the crystal
    (1 = free surface).  Values other than 1 are only useful for checks on a
    contrast-free slab.
    """
    f_lo, f_hi = map(float, f_window)
    if not 0 < f_lo < f_hi:
        raise DomainError(f"frequency window must satisfy 0 < f_min < f_max, got {f_window}")
    step = lattice.speed / (16 * lattice.length)
    grid = np.arange(f_lo - 4 * step, f_hi + 4 * step, step)
    grid = grid[grid > 0]
    mag = np.abs(outgoing_condition(lattice, 2 * math.pi * grid, exterior_index))
    seeds = [n for n in range(1, len(grid) - 1) if mag[n] < mag[n - 1] and mag[n] <= mag[n + 1]]

    roots = []
    for n in seeds:
        omega, resid = _newton(lattice, complex(2 * math.pi * grid[n]), exterior_index)
        if not math.isfinite(omega.real) or resid > residual_tol:
            raise NumericalError(
                f"Newton polish from seed {grid[n]:.9g} Hz did not converge "
                f"(relative residual {resid:.3g})")
        f = omega.real / (2 * math.pi)
        if not f_lo <= f <= f_hi:
            continue
        if any(abs(omega - r) <= 1e-9 * abs(r) for r in roots):
            continue
        if omega.imag >= 0:
            raise NumericalError(f"root {omega!r} is not decaying; outgoing condition violated")
        roots.append(omega)
    roots.sort(key=lambda w: w.real)

    f_low, f_high = _band_edges(lattice)
    f_mid = 0.5 * (f_low + f_high)
    modes = []
    seen = {}
    for omega in roots:
        if lattice.speed_reduction == 0:
            i = _uniform_index(lattice, omega, exterior_index)
        else:
            i, _ = _ladder_index(lattice, omega, f_mid)
        if i in seen:
            raise IndexCollisionError(
                f"roots {seen[i].real / (2 * math.pi):.9g} Hz and "
                f"{omega.real / (2 * math.pi):.9g} Hz both map to i = {i}")
        seen[i] = omega
        modes.append(mode_from_frequency(lattice, omega, i, exterior_index, samples_per_cell))
    return modes


def _uniform_index(lattice, omega, exterior_index):
    # contrast-free slab: kx = Re(w)/v exactly, half-wave number p = kx L / pi
    p = int(round(omega.real * lattice.length / (math.pi * lattice.speed)))
    offset = p - lattice.cells
    if offset == 0:
        raise IndexCollisionError("a mode at kx = k_P has no index on the ladder")
    return offset + 1 if offset < 0 else offset


def quality_factor(mode, lattice):
    """Stored energy over energy leaked per radian of oscillation.

    The result is cross-checked against ``Re(w) / (2 |Im(w)|)``; a mismatch
    above 5 % for ``Q > 100`` is logged as a warning.
    """
    x, u, du = mode.x, mode.field, mode.field_slope
    local = np.mod(x, lattice.period) / lattice.period
    half_gap = (1 - lattice.metallization) / 2
    index = np.where((local > half_gap) & (local < 1 - half_gap), lattice.metal_index, 1.0)
    k0 = mode.omega.real / lattice.speed
    energy = np.trapezoid(0.25 * (index**2 * k0**2 * np.abs(u) ** 2 + np.abs(du) ** 2), x)
    k_out = k0 * mode.exterior_index
    leak = 0.5 * k_out * (abs(u[0]) ** 2 + abs(u[-1]) ** 2)
    if not leak > 0 or not math.isfinite(energy / leak):
        raise NumericalError("no leakage resolved: imaginary part of the mode frequency unresolved")
    q = energy / leak
    qc = mode.quality
    if qc > 100 and abs(q - qc) > 0.05 * qc:
        logger.warning("mode i=%d: energy Q %.1f disagrees with complex-frequency Q %.1f",
                       mode.i, q, qc)
    return q


def transverse_modes(lattice):
    """Odd transverse orders ``j`` confined by total internal reflection.

    A partial wave with ``kx = 2 pi / a`` and ``ky = pi j / W`` is confined
    when its incidence angle ``arctan(kx / ky)`` exceeds the critical angle
    ``arcsin(1 / n_eff)``.
    """
    n_eff = lattice.effective_index
    alpha_c = math.asin(min(1.0, 1.0 / n_eff))
    kx = 2 * math.pi / lattice.electrical_period
    out = []
    j = 1
    while True:
        ky = math.pi * j / lattice.aperture
        if math.atan2(kx, ky) <= alpha_c:
            break
        out.append(TransverseMode(j=j, ky=ky))
        j += 2
    return out


def mode_frequency_2d(mode, transverse, lattice=None):
    """Frequency of mode ``(i, j)``: ``f_i sqrt(1 + (ky / kx)**2)``."""
    return mode.frequency * math.sqrt(1.0 + (transverse.ky / mode.kx) ** 2)

"""Device assembly, transmission traces and flux-frequency maps.

A device is the crystal, the transmon and the list of phonon modes that couple
to it.  Traces and maps are steady-state transmission ``t`` of the drive line
as a function of drive frequency (and flux bias).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import coupling as cpl
from . import lattice as lat
from . import transmon as tmn
from .dynamics import (
    DEFAULT_DIMENSION_CAP,
    SystemModel,
    lindblad_steady_state,
    linear_response,
)
from .errors import DomainError, NumericalError, ParameterError, PreconditionError, SawCrystalError

SOLVERS = ("semiclassical", "lindblad")
DEFAULT_WINDOW = (3.20e9, 3.35e9)


@dataclass(frozen=True)
class CoupledMode:
    """One ``(i, j)`` phonon mode with its coupling to the atom.

    ``frequency`` in Hz, ``potential`` in V, ``g`` in rad/s, ``flux`` is the
    bias at which the bare atom is resonant with the mode (nan if never).
    """

    i: int
    j: int
    frequency: float
    quality: float
    kx: float
    potential: float
    g: float
    flux: float = float("nan")

    @property
    def omega(self):
        return 2 * math.pi * self.frequency

    @property
    def kappa(self):
        """Energy decay rate, rad/s."""
        return self.omega / self.quality


@dataclass(frozen=True, eq=False)
class DeviceAssembly:
    lattice: lat.LatticeSpec
    transmon: tmn.TransmonSpec
    piezo: cpl.PiezoConstants
    modes: tuple
    window: tuple = DEFAULT_WINDOW
    qnms: tuple = ()

    def mode_arrays(self):
        if not self.modes:
            return np.zeros(0), np.zeros(0), np.zeros(0)
        return (np.array([m.omega for m in self.modes]),
                np.array([m.kappa for m in self.modes]),
                np.array([m.g for m in self.modes]))

    def find(self, i, j):
        for m in self.modes:
            if (m.i, m.j) == (i, j):
                return m
        raise KeyError(f"mode ({i}, {j}) is not among the coupled modes")


def build_device(lattice, transmon, piezo=None, window=DEFAULT_WINDOW,
                 min_relative_coupling=1e-6, xi0_at_resonance=True):
    """Find the modes in ``window`` and their couplings to the atom.

    Every 1D quasinormal mode is combined with every confined transverse
    order; the pair is kept when its 2D frequency lies in ``window`` and its
    coupling exceeds ``min_relative_coupling`` times the strongest one.  The
    parity selection rules make the discarded couplings vanish to rounding.

    With ``xi0_at_resonance`` the charge matrix element is evaluated at the
    flux where the bare atom meets the mode; otherwise at zero flux.
    """
    piezo = piezo or cpl.PiezoConstants()
    f_lo, f_hi = map(float, window)
    if not 0 < f_lo < f_hi:
        raise DomainError(f"mode window must satisfy 0 < f_min < f_max, got {window}")
    transverse = lat.transverse_modes(lattice)
    if not transverse or lattice.speed_reduction == 0:
        return DeviceAssembly(lattice, transmon, piezo, (), (f_lo, f_hi), ())

    # the transverse dressing only raises frequencies: pad the 1D search below
    kx_min = 2 * math.pi / lattice.electrical_period * 0.9
    shift = math.sqrt(1 + (transverse[-1].ky / kx_min) ** 2)
    try:
        qnms = lat.find_qnms(lattice, (f_lo / shift, f_hi))
    except SawCrystalError as exc:
        raise type(exc)(f"[lattice-qnm] {exc}") from exc
    geom = cpl.ElectrodeGeometry.from_lattice(lattice)
    z0 = cpl.zero_point_displacement(lattice, piezo)

    found = []
    for q in qnms:
        for t in transverse:
            f = lat.mode_frequency_2d(q, t)
            if not f_lo <= f <= f_hi:
                continue
            v = float(cpl.overlap_potential(q.x, q.field, geom, t.j, z0, piezo))
            try:
                flux = tmn.flux_for_frequency(transmon, f)
            except DomainError:
                flux = float("nan")
            xi0 = tmn.matrix_element_xi0(transmon, flux if xi0_at_resonance and
                                         math.isfinite(flux) else 0.0)
            g = float(cpl.coupling_strength(float(xi0), transmon.c_idt, v))
            found.append(CoupledMode(q.i, t.j, f, q.quality, q.kx, v, g, flux))
    g_max = max((m.g for m in found), default=0.0)
    modes = tuple(sorted((m for m in found if g_max > 0 and m.g > min_relative_coupling * g_max),
                         key=lambda m: m.frequency))
    return DeviceAssembly(lattice, transmon, piezo, modes, (f_lo, f_hi), tuple(qnms))


def assemble_device(config):
    """Device described by a parsed :class:`~sawcrystal.config.Config`."""
    return build_device(config.lattice, config.transmon, config.piezo, config.mode_window,
                        config.min_relative_coupling)


def _check_solver(solver):
    if solver not in SOLVERS:
        raise ParameterError(f"solver must be one of {SOLVERS}, got {solver!r}")


def simulate_trace(device, phi, f_grid, drive_amplitude=2 * math.pi * 100e3,
                   solver="semiclassical", n_max=2, dimension_cap=DEFAULT_DIMENSION_CAP):
    """Transmission ``t(f)`` at flux ``phi``.

    The semiclassical path solves all frequencies in one batched linear solve;
    the Lindblad path builds one master equation per frequency point.
    """
    _check_solver(solver)
    f_grid = np.asarray(f_grid, dtype=float)
    tr = device.transmon
    omega_a = 2 * math.pi * tmn.qubit_frequency(tr, phi)
    w, kappa, g = device.mode_arrays()
    if solver == "semiclassical":
        if drive_amplitude > tr.gamma1 / 10 * (1 + 1e-12):
            raise PreconditionError("semiclassical closure requires Omega <= Gamma1 / 10")
        if np.any(np.abs(2 * math.pi * f_grid - omega_a) >= omega_a / 10):
            raise ParameterError("rotating-wave approximation requires |drive - omega_a| < omega_a/10")
        s, _ = linear_response(omega_a, tr.gamma2, w, kappa, g, 2 * math.pi * f_grid)
        return 1 - 1j * tr.gamma1 * s
    modes = tuple(zip(w, kappa, g))
    out = np.empty(f_grid.shape, dtype=complex)
    for n, f in enumerate(f_grid):
        model = SystemModel(omega_a, tr.gamma1, tr.gamma_phi, modes, 2 * math.pi * f,
                            drive_amplitude)
        try:
            out[n] = lindblad_steady_state(model, n_max, dimension_cap).t
        except SawCrystalError as exc:
            raise type(exc)(f"[dynamics] at f = {f:.9g} Hz: {exc}") from exc
    return out


@dataclass(frozen=True)
class SweepSpec:
    """Flux grid, frequency grid (Hz) and drive amplitude (rad/s)."""

    flux: np.ndarray
    frequency: np.ndarray
    drive_amplitude: float = 2 * math.pi * 100e3

    def __post_init__(self):
        for name in ("flux", "frequency"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size < 2:
                raise ParameterError(f"{name} grid needs at least 2 points")
            if np.any(np.diff(arr) <= 0):
                raise ParameterError(f"{name} grid must be strictly increasing")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.drive_amplitude > 0:
            raise ParameterError("drive amplitude must be positive")

    @classmethod
    def linear(cls, flux_range, flux_points, f_range, f_points, **kwargs):
        return cls(np.linspace(*flux_range, flux_points), np.linspace(*f_range, f_points),
                   **kwargs)

    @classmethod
    def covering(cls, transmon, f_range, flux_points=201, f_points=401, margin=0.2, **kwargs):
        """Sweep whose flux range takes the bare atom across ``f_range``.

        The atom is tuned from ``f_max + margin * span`` down to
        ``f_min - margin * span`` (clipped to its maximum frequency).
        """
        lo, hi = map(float, f_range)
        span = hi - lo
        top = min(hi + margin * span, transmon.max_frequency)
        phi0 = tmn.flux_for_frequency(transmon, top)
        phi1 = tmn.flux_for_frequency(transmon, lo - margin * span)
        return cls.linear((phi0, phi1), flux_points, (lo, hi), f_points, **kwargs)


def simulate_map(device, sweep, solver="semiclassical", threads=1, n_max=2,
                 dimension_cap=DEFAULT_DIMENSION_CAP):
    """Row-major map ``t[flux, frequency]``.

    Flux columns are distributed over ``threads`` workers; every column is
    computed independently, so the result does not depend on ``threads``.
    """
    _check_solver(solver)
    if threads < 1:
        raise ParameterError("threads must be >= 1")

    def column(n):
        try:
            return simulate_trace(device, float(sweep.flux[n]), sweep.frequency,
                                  sweep.drive_amplitude, solver, n_max, dimension_cap)
        except SawCrystalError as exc:
            raise type(exc)(f"flux index {n} (phi = {sweep.flux[n]:.9g}): {exc}") from exc

    out = np.empty((sweep.flux.size, sweep.frequency.size), dtype=complex)
    if threads == 1:
        for n in range(sweep.flux.size):
            out[n] = column(n)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for n, row in enumerate(pool.map(column, range(sweep.flux.size))):
                out[n] = row
    if not np.all(np.isfinite(out)):
        raise NumericalError("map contains non-finite values")
    return out

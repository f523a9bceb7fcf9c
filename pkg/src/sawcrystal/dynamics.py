"""Driven, damped atom coupled to several phonon modes: steady-state scattering.

Rotating frame at the drive frequency, rotating-wave approximation for both
the drive and the atom-mode couplings.  ``r = i Gamma1 <sigma-> / Omega`` is
the amplitude the atom scatters back into the line and ``t = 1 - r``.

Two solvers are provided.  ``semiclassical_response`` closes the equations of
motion at weak drive (``<sigma_z> = -1``) and solves a ``(1 + M)``-dimensional
linear system.  ``lindblad_steady_state`` builds the full Liouvillian on a
truncated Fock space and extracts its null vector.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericalError, ParameterError, PreconditionError, ResourceError

DEFAULT_DIMENSION_CAP = 1024


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Atom + modes + drive.  All frequencies and rates in rad/s.

    ``modes`` is a sequence of ``(omega_k, kappa_k, g_k)`` with ``kappa_k`` the
    mode energy decay rate.
    """

    omega_a: float
    gamma1: float
    gamma_phi: float
    modes: tuple = ()
    drive_omega: float = 0.0
    drive_amplitude: float = 2 * math.pi * 100e3

    def __post_init__(self):
        modes = tuple(tuple(float(v) for v in m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        if not self.gamma1 > 0 or self.gamma_phi < 0:
            raise ParameterError("need gamma1 > 0 and gamma_phi >= 0")
        if not self.drive_amplitude > 0:
            raise ParameterError("drive amplitude must be positive")
        for w, kappa, g in modes:
            if not kappa > 0:
                raise ParameterError(f"mode at {w:.6g} rad/s has non-positive kappa")
            if g < 0:
                raise ParameterError(f"mode at {w:.6g} rad/s has negative coupling")
        if not abs(self.drive_omega - self.omega_a) < self.omega_a / 10:
            raise ParameterError("rotating-wave approximation requires |drive - omega_a| < omega_a/10")

    @property
    def gamma2(self):
        return self.gamma1 / 2 + self.gamma_phi

    def mode_arrays(self):
        if not self.modes:
            return np.zeros(0), np.zeros(0), np.zeros(0)
        w, kappa, g = np.array(self.modes, dtype=float).T
        return w, kappa, g


@dataclass(frozen=True, eq=False)
class SteadyState:
    sigma_minus: complex
    mode_amplitudes: np.ndarray
    r: complex
    t: complex
    rho: np.ndarray = field(default=None, repr=False)


def reflection(sigma_minus, gamma1, drive_amplitude):
    """``(r, t)`` with ``r = i Gamma1 <sigma-> / Omega`` and ``t = 1 - r``."""
    if not drive_amplitude > 0:
        raise ParameterError("drive amplitude must be positive")
    r = 1j * gamma1 * sigma_minus / drive_amplitude
    return r, 1 - r


def linear_response(omega_a, gamma2, mode_omega, mode_kappa, mode_g, drive_omega):
    """``<sigma->/Omega`` and ``<b_k>/Omega`` of the weak-drive equations.

    Vectorized over ``drive_omega`` (and ``omega_a`` if it broadcasts).  Returns
    arrays of shape ``drive_omega.shape`` and ``drive_omega.shape + (M,)``.
    """
    drive_omega = np.asarray(drive_omega, dtype=float)
    omega_a = np.broadcast_to(np.asarray(omega_a, dtype=float), drive_omega.shape)
    mode_omega = np.asarray(mode_omega, dtype=float)
    mode_kappa = np.asarray(mode_kappa, dtype=float)
    mode_g = np.asarray(mode_g, dtype=float)
    m = mode_omega.size
    shape = drive_omega.shape
    w = drive_omega.reshape(-1)
    a = np.zeros((w.size, m + 1, m + 1), dtype=complex)
    a[:, 0, 0] = 1j * (omega_a.reshape(-1) - w) + gamma2
    if m:
        a[:, 0, 1:] = 1j * mode_g
        a[:, 1:, 0] = 1j * mode_g
        idx = np.arange(1, m + 1)
        a[:, idx, idx] = 1j * (mode_omega[None, :] - w[:, None]) + mode_kappa[None, :] / 2
    rhs = np.zeros((w.size, m + 1, 1), dtype=complex)
    rhs[:, 0, 0] = -0.5j
    try:
        x = np.linalg.solve(a, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"weak-drive system is singular: {exc}")
    if not np.all(np.isfinite(x)):
        raise NumericalError("weak-drive system is singular")
    return x[:, 0].reshape(shape), x[:, 1:].reshape(shape + (m,))


def semiclassical_response(model):
    """Weak-drive steady state of ``model``; requires ``Omega <= Gamma1 / 10``."""
    if model.drive_amplitude > model.gamma1 / 10 * (1 + 1e-12):
        raise PreconditionError("semiclassical closure requires Omega <= Gamma1 / 10")
    w, kappa, g = model.mode_arrays()
    s, b = linear_response(model.omega_a, model.gamma2, w, kappa, g, model.drive_omega)
    s = complex(s) * model.drive_amplitude
    r, t = reflection(s, model.gamma1, model.drive_amplitude)
    return SteadyState(sigma_minus=s, mode_amplitudes=np.asarray(b) * model.drive_amplitude,
                       r=r, t=t)


# ---------------------------------------------------------------------------
# Lindblad


def _embed(op, position, dims):
    out = sp.identity(1, format="csr", dtype=complex)
    for n, d in enumerate(dims):
        out = sp.kron(out, op if n == position else sp.identity(d, dtype=complex), format="csr")
    return out


def _liouvillian(h, c_ops):
    d = h.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    # column-stacking: vec(A X B) = (B^T kron A) vec(X)
    lv = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for c in c_ops:
        cdc = (c.conj().T @ c).tocsr()
        lv = lv + sp.kron(c.conj(), c) - 0.5 * sp.kron(eye, cdc) - 0.5 * sp.kron(cdc.T, eye)
    return lv.tocsc()


def lindblad_operators(model, n_max):
    """Scaled Hamiltonian, collapse operators and the operators to measure.

    Rates are divided by ``Gamma1`` to keep the Liouvillian well conditioned.
    """
    w, kappa, g = model.mode_arrays()
    dims = [2] + [n_max + 1] * len(w)
    scale = model.gamma1
    sm1 = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    sz1 = sp.csr_matrix(np.diag([-1.0, 1.0]).astype(complex))
    a1 = sp.csr_matrix(np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex))

    sm = _embed(sm1, 0, dims)
    sz = _embed(sz1, 0, dims)
    sp_ = sm.conj().T
    h = (model.omega_a - model.drive_omega) / scale * (sp_ @ sm)
    h = h + model.drive_amplitude / (2 * scale) * (sp_ + sm)
    c_ops = [math.sqrt(model.gamma1 / scale) * sm]
    if model.gamma_phi > 0:
        c_ops.append(math.sqrt(model.gamma_phi / (2 * scale)) * sz)
    bs = []
    for k in range(len(w)):
        b = _embed(a1, k + 1, dims)
        bs.append(b)
        bd = b.conj().T
        h = h + (w[k] - model.drive_omega) / scale * (bd @ b)
        h = h + g[k] / scale * (sp_ @ b + sm @ bd)
        c_ops.append(math.sqrt(kappa[k] / scale) * b)
    return h.tocsr(), c_ops, sm, bs


def lindblad_steady_state(model, n_max=2, dimension_cap=DEFAULT_DIMENSION_CAP):
    """Unique steady state of the Lindblad master equation.

    The Liouvillian is assembled as a sparse matrix; one row is replaced by
    the trace condition and the system is solved by sparse LU with one step of
    iterative refinement.
    """
    if n_max < 1:
        raise ParameterError("n_max must be a positive integer")
    dim = 2 * (n_max + 1) ** len(model.modes)
    if dim > dimension_cap:
        raise ResourceError(f"Hilbert dimension {dim} exceeds the cap {dimension_cap}")
    h, c_ops, sm, bs = lindblad_operators(model, n_max)
    lv = _liouvillian(h, c_ops)

    if dim <= 64:
        sv = np.linalg.svd(lv.toarray(), compute_uv=False)
        if sv[-2] < 1e-10 * sv[0]:
            raise NumericalError("Liouvillian null space is degenerate: steady state not unique")

    n = dim * dim
    trace_row = sp.csr_matrix((np.ones(dim), (np.zeros(dim, dtype=int),
                                              np.arange(dim) * (dim + 1))), shape=(1, n))
    a = sp.vstack([trace_row, lv[1:, :]]).tocsc()
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise NumericalError(f"steady state not unique (singular Liouvillian): {exc}")
    x = lu.solve(rhs)
    x = x + lu.solve(rhs - a @ x)
    if not np.all(np.isfinite(x)):
        raise NumericalError("steady-state solve produced non-finite values")

    rho = x.reshape(dim, dim, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr - 1) > 1e-9:
        raise NumericalError(f"steady state trace {tr!r} deviates from 1")
    if np.min(np.diag(rho).real) < -1e-9:
        raise NumericalError("steady state has negative populations")

    sigma_minus = complex(np.sum(sm.multiply(rho.T)))
    amps = np.array([complex(np.sum(b.multiply(rho.T))) for b in bs])
    r, t = reflection(sigma_minus, model.gamma1, model.drive_amplitude)
    return SteadyState(sigma_minus=sigma_minus, mode_amplitudes=amps, r=r, t=t, rho=rho)

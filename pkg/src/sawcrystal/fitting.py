"""Lorentzian dips, anticrossing hyperbolas and quality factors from traces.

All fits are Levenberg-Marquardt (``scipy.optimize.least_squares(method="lm")``)
started from deterministic estimates read off the data.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

from .errors import AmbiguityError, FitError, NumericalError, ResolutionError

DIP_THRESHOLD = 5.0
# a prominence is the difference of two noisy samples
PROMINENCE_NOISE = math.sqrt(2.0)


@dataclass(frozen=True)
class LorentzianFit:
    """Dip ``baseline - depth / (1 + ((f - center) / half_width)**2)``.

    For :func:`fit_lorentzian` the fitted quantity is the power ``|t|**2`` and
    ``depth`` is relative to the baseline; ``gamma1`` and ``gamma2`` (rad/s)
    are the atomic rates implied by the weak-drive scattering formula.
    """

    center: float
    half_width: float
    depth: float
    baseline: float
    residual: float
    gamma1: float = float("nan")
    gamma2: float = float("nan")

    @property
    def quality(self):
        return self.center / (2 * self.half_width)


@dataclass(frozen=True)
class AnticrossingFit:
    """Hyperbola fit; ``g`` in rad/s, ``mode_frequency`` in Hz."""

    crossing_flux: float
    mode_frequency: float
    g: float
    residual: float
    columns: int

    @property
    def splitting(self):
        """Minimal distance between the two branches, Hz."""
        return 2 * self.g / (2 * math.pi)


def lorentzian_dip(f, center, half_width, depth, baseline):
    return baseline - depth / (1 + ((np.asarray(f) - center) / half_width) ** 2)


def _noise_floor(y):
    """Noise RMS estimated from the outer quartiles of a trace.

    The residual is taken against the mean of the two neighbours of each
    point, so smooth structure (broad dips, slopes) does not count as noise.
    For white noise of RMS ``s`` that residual has RMS ``s sqrt(3/2)``.
    """
    y = np.asarray(y, dtype=float)
    if len(y) < 8:
        return 0.0
    resid = y[1:-1] - 0.5 * (y[:-2] + y[2:])
    q = max(len(resid) // 4, 1)
    outer = np.concatenate([resid[:q], resid[-q:]])
    return float(np.sqrt(np.mean(outer**2) / 1.5))


def _initial_dip(f, y):
    baseline = float(np.median(np.concatenate([y[: max(len(y) // 8, 1)],
                                               y[-max(len(y) // 8, 1):]])))
    k = int(np.argmin(y))
    depth = baseline - float(y[k])
    floor = _noise_floor(y)
    if depth <= max(DIP_THRESHOLD * floor, 1e-12 * max(abs(baseline), 1.0)):
        raise FitError(f"no dip above the noise floor (depth {depth:.3g}, floor {floor:.3g})")
    half = baseline - depth / 2
    left = k
    while left > 0 and y[left] < half:
        left -= 1
    right = k
    while right < len(y) - 1 and y[right] < half:
        right += 1
    hw = 0.5 * (f[right] - f[left])
    if hw <= 0:
        hw = f[1] - f[0]
    return f[k], hw, depth, baseline


def _lm(residuals, p0, what):
    try:
        res = optimize.least_squares(residuals, p0, method="lm", xtol=1e-15, ftol=1e-15,
                                     gtol=1e-15, max_nfev=20000)
    except ValueError as exc:
        raise FitError(f"{what}: {exc}")
    if not res.success and res.status <= 0:
        raise NumericalError(f"{what} did not converge: {res.message} "
                             f"(residual {np.linalg.norm(res.fun):.3g})")
    return res


def fit_dip(f, y):
    """Least-squares Lorentzian dip fit of an arbitrary real trace."""
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    f0, hw, depth, base = _initial_dip(f, y)
    step = float(np.min(np.diff(f)))
    if hw < step:
        raise ResolutionError(f"dip near {f0:.9g} Hz is narrower than the grid step {step:.3g} Hz")
    scale = hw

    def resid(p):
        return lorentzian_dip(f, f0 + p[0] * scale, abs(p[1]) * scale, p[2], p[3]) - y

    res = _lm(resid, [0.0, hw / scale, depth, base], "Lorentzian fit")
    p = res.x
    return LorentzianFit(center=f0 + p[0] * scale, half_width=abs(p[1]) * scale,
                         depth=p[2], baseline=p[3], residual=float(np.linalg.norm(res.fun)))


def fit_lorentzian(f, t):
    """Fit the dip of a transmission trace and infer ``Gamma1``, ``Gamma2``.

    ``t`` may be complex or already ``|t|``.  The fit runs on ``|t|**2``, which
    is an exact Lorentzian for a weakly driven two-level scatterer:
    ``|t|^2 = 1 - a (2 - a) / (1 + (df / hwhm)^2)`` with ``a = Gamma1 / (2 Gamma2)``
    and ``hwhm = Gamma2 / 2 pi``.
    """
    f = np.asarray(f, dtype=float)
    power = np.abs(np.asarray(t)) ** 2
    fit = fit_dip(f, power)
    rel = fit.depth / fit.baseline
    if not 0 < rel <= 1:
        raise FitError(f"relative dip depth {rel:.3g} outside (0, 1]")
    a = 1 - math.sqrt(1 - rel)
    gamma2 = 2 * math.pi * fit.half_width
    return LorentzianFit(center=fit.center, half_width=fit.half_width, depth=rel,
                         baseline=fit.baseline, residual=fit.residual,
                         gamma1=2 * gamma2 * a, gamma2=gamma2)


# ---------------------------------------------------------------------------
# anticrossings


def _column_dips(f, y, max_dips=2):
    """Sub-grid positions of the deepest local minima of a column."""
    prom_floor = DIP_THRESHOLD * PROMINENCE_NOISE * max(_noise_floor(y), 1e-9)
    peaks, props = signal.find_peaks(-y, prominence=prom_floor)
    if peaks.size == 0:
        return []
    order = np.argsort(props["prominences"])[::-1][:max_dips]
    out = []
    for k in sorted(peaks[order]):
        if 0 < k < len(f) - 1:
            y0, y1, y2 = y[k - 1], y[k], y[k + 1]
            den = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / den if den > 0 else 0.0
            out.append(f[k] + shift * (f[k + 1] - f[k]))
        else:
            out.append(f[k])
    return out


def hyperbola(fa, fm, g_hz):
    centre = 0.5 * (fa + fm)
    half = np.sqrt(g_hz**2 + 0.25 * (fa - fm) ** 2)
    return centre - half, centre + half


def extract_anticrossing(phi, f, t_map, f_window, atom_frequency, min_columns=3,
                         mode_frequency=None, mode_tolerance=None, max_dips=6):
    """Fit the two-branch hyperbola of an atom-mode anticrossing.

    Every flux column contributes its dips inside ``f_window``.  A coarse
    search over ``(f_m, g)`` picks the hyperbola that explains most dips;
    dips are then assigned to the nearer branch and the hyperbola is refined
    by least squares, reassigning until the assignment is stable.  Dips of
    other modes or of the far-detuned atom are left unassigned.

    Parameters
    ----------
    phi, f : 1D arrays
        Flux and frequency grids of ``t_map`` (shape ``(len(phi), len(f))``).
    f_window : (float, float)
        Frequency band searched for the two branches.
    atom_frequency : callable
        Bare atom frequency ``f_a(phi)`` in Hz.
    mode_frequency : float, optional
        Prior for the bare mode frequency.  Defaults to a search of the
        whole window.
    mode_tolerance : float, optional
        Half-width (Hz) of the coarse ``f_m`` search around
        ``mode_frequency``; defaults to a quarter of the window.  Neighbouring
        modes leave flux-independent dip lines that a nearly uncoupled
        hyperbola would otherwise lock onto.

    Returns
    -------
    AnticrossingFit
        ``g`` is half the minimal branch splitting (rad/s); ``columns``
        counts flux columns in which both branches were assigned.
    """
    phi = np.asarray(phi, dtype=float)
    f = np.asarray(f, dtype=float)
    mag = np.abs(np.asarray(t_map))
    sel = (f >= f_window[0]) & (f <= f_window[1])
    fw = f[sel]
    if fw.size < 8:
        raise FitError("frequency window holds fewer than 8 samples")
    fa = np.asarray(atom_frequency(phi), dtype=float)
    step = fw[1] - fw[0]
    span = fw[-1] - fw[0]

    dips = np.full((len(phi), max_dips), np.inf)
    for n in range(len(phi)):
        d = _column_dips(fw, mag[n, sel], max_dips)
        dips[n, :len(d)] = d
    if not np.isfinite(dips).any():
        raise FitError(f"no dips in [{f_window[0] / 1e9:.4f}, {f_window[1] / 1e9:.4f}] GHz")

    # assignment tolerance: a few grid steps, never below one percent of the window
    tol = max(3 * step, 0.01 * span)

    def cost(fm, g):
        total = 0.0
        for branch in hyperbola(fa[:, None, None], fm, g):
            dist = np.min(np.abs(dips[:, None, None, :] - branch[..., None]), axis=-1)
            total = total + np.sum(np.minimum(dist, tol) ** 2, axis=0)
        return total

    if mode_frequency is None:
        fm_grid = np.linspace(fw[0], fw[-1], 121)
    else:
        half = span / 4 if mode_tolerance is None else mode_tolerance
        fm_grid = np.linspace(max(fw[0], mode_frequency - half),
                              min(fw[-1], mode_frequency + half), 121)
    g_grid = np.linspace(step, span / 2, 80)
    c = cost(fm_grid[:, None], g_grid[None, :])
    a, b = np.unravel_index(int(np.argmin(c)), c.shape)
    fm, g_hz = float(fm_grid[a]), float(g_grid[b])

    rows = np.arange(len(phi))
    assigned = None
    for _ in range(8):
        lo, hi = hyperbola(fa, fm, g_hz)
        d_lo = np.abs(dips - lo[:, None])
        d_hi = np.abs(dips - hi[:, None])
        k_lo = np.argmin(d_lo, axis=1)
        k_hi = np.argmin(d_hi, axis=1)
        ok_lo = d_lo[rows, k_lo] < tol
        ok_hi = d_hi[rows, k_hi] < tol
        # one dip cannot sit on both branches
        clash = ok_lo & ok_hi & (k_lo == k_hi)
        ok_lo &= ~clash
        ok_hi &= ~clash
        new = (ok_lo, ok_hi, k_lo, k_hi)
        if assigned is not None and all(np.array_equal(x, y) for x, y in zip(new, assigned)):
            break
        assigned = new
        both = int(np.sum(ok_lo & ok_hi))
        if both < min_columns:
            raise FitError(f"only {both} flux columns show both branches in "
                           f"[{f_window[0] / 1e9:.4f}, {f_window[1] / 1e9:.4f}] GHz; "
                           f"need {min_columns}")
        y_lo, y_hi = dips[rows, k_lo][ok_lo], dips[rows, k_hi][ok_hi]
        fa_lo, fa_hi = fa[ok_lo], fa[ok_hi]
        fm0, scale = fm, max(g_hz, step)

        def resid(p):
            fm_p, g_p = fm0 + p[0] * scale, abs(p[1]) * scale
            return np.concatenate([hyperbola(fa_lo, fm_p, g_p)[0] - y_lo,
                                   hyperbola(fa_hi, fm_p, g_p)[1] - y_hi]) / scale

        res = _lm(resid, [0.0, g_hz / scale], "anticrossing fit")
        fm = fm0 + res.x[0] * scale
        g_hz = abs(res.x[1]) * scale
        residual = float(np.linalg.norm(res.fun) * scale)

    both = int(np.sum(assigned[0] & assigned[1]))
    crossing = float(np.interp(0.0, *_monotone(fa - fm, phi)))
    return AnticrossingFit(crossing_flux=crossing, mode_frequency=fm, g=2 * math.pi * g_hz,
                           residual=residual, columns=both)


def _monotone(x, y):
    order = np.argsort(x)
    return x[order], y[order]


# ---------------------------------------------------------------------------
# quality factors from reflection dips


def fit_q_from_dip(f, y, overlap_threshold=1.0, min_points_per_width=3):
    """Quality factors ``Q = f0 / (2 HWHM)`` of every dip in a trace.

    Dips are located, seeded individually, then refined jointly as a sum of
    Lorentzians on a common baseline so that neighbouring tails do not bias
    each other.  Returns a list of :class:`LorentzianFit` sorted by centre.

    Raises
    ------
    AmbiguityError
        Two dips closer than ``overlap_threshold`` times the sum of their
        half widths.
    ResolutionError
        A dip narrower than ``min_points_per_width`` grid steps (FWHM).
    """
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    step = float(np.min(np.diff(f)))
    baseline = float(np.max(y))
    floor = _noise_floor(y)
    prom = max(DIP_THRESHOLD * PROMINENCE_NOISE * floor, 1e-9 * max(abs(baseline), 1.0))
    peaks, props = signal.find_peaks(-y, prominence=prom)
    if peaks.size == 0:
        raise FitError("no dips above the noise floor")

    widths = signal.peak_widths(-y, peaks, rel_height=0.5)[0] * step
    seeds = []
    for k, w, p in zip(peaks, widths, props["prominences"]):
        hw = 0.5 * w
        if 2 * hw < min_points_per_width * step:
            raise ResolutionError(f"dip at {f[k]:.9g} Hz (FWHM ~{2 * hw:.3g} Hz) is not resolved "
                                  f"by the {step:.3g} Hz grid")
        seeds.append((f[k], hw, p))
    for (fa, ha, _), (fb, hb, _) in zip(seeds, seeds[1:]):
        if fb - fa < overlap_threshold * (ha + hb):
            raise AmbiguityError(f"dips at {fa:.9g} and {fb:.9g} Hz overlap",
                                 candidates=[fa, fb])

    scales = np.array([s[1] for s in seeds])
    centers0 = np.array([s[0] for s in seeds])

    def model(p):
        out = np.full_like(f, p[-1])
        for n in range(len(seeds)):
            c = centers0[n] + p[3 * n] * scales[n]
            hw = abs(p[3 * n + 1]) * scales[n]
            out -= p[3 * n + 2] / (1 + ((f - c) / hw) ** 2)
        return out

    p0 = []
    for _, hw, depth in seeds:
        p0 += [0.0, 1.0, depth]
    p0.append(baseline)
    res = _lm(lambda p: model(p) - y, p0, "multi-dip fit")
    p = res.x
    resid = float(np.linalg.norm(res.fun))
    fits = []
    for n in range(len(seeds)):
        fits.append(LorentzianFit(center=centers0[n] + p[3 * n] * scales[n],
                                  half_width=abs(p[3 * n + 1]) * scales[n],
                                  depth=p[3 * n + 2], baseline=p[-1], residual=resid))
    return fits

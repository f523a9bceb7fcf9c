"""Generate synthetic spectroscopy data and read the parameters back.

Run with ``python demos/04_fit_round_trip.py``.
"""

import math

import numpy as np

from sawcrystal import fit_lorentzian, fit_q_from_dip, linear_response

TWO_PI = 2 * math.pi
g1, g2 = TWO_PI * 8e6, TWO_PI * 11e6

# bare atom: weak-drive transmission dip
f = np.linspace(2.9e9, 3.1e9, 801)
s, _ = linear_response(TWO_PI * 3.0e9, g2, [], [], [], TWO_PI * f)
t = 1 - 1j * g1 * s
fit = fit_lorentzian(f, t)
print(f"Gamma1/2pi {fit.gamma1 / TWO_PI / 1e6:.3f} MHz (true 8), "
      f"Gamma2/2pi {fit.gamma2 / TWO_PI / 1e6:.3f} MHz (true 11)")
print(f"amplitude dip depth {1 - np.abs(t).min():.4f}, Gamma1/(2 Gamma2) = {g1 / (2 * g2):.4f}")

# three resonator dips with known quality factors plus a little noise
fq = np.linspace(3.22e9, 3.31e9, 4001)
y = np.ones_like(fq)
for c, q in zip((3.244e9, 3.262e9, 3.287e9), (496, 1040, 1100)):
    y -= 0.4 / (1 + ((fq - c) / (c / (2 * q))) ** 2)
y += np.random.default_rng(1).normal(0, 1e-3, fq.size)
for d in fit_q_from_dip(fq, y):
    print(f"dip at {d.center / 1e9:.4f} GHz: Q = {d.quality:.0f}")

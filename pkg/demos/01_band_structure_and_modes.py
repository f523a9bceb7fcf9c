"""Stop band, quasinormal-mode ladder and quality factors of the reference lattice.

Run with ``python demos/01_band_structure_and_modes.py``.
"""

import numpy as np

from sawcrystal import LatticeSpec, band_gap, dispersion, find_qnms, quality_factor, transverse_modes
from sawcrystal.lattice import mode_frequency_2d

lattice = LatticeSpec()
lo, hi = band_gap(lattice)
print(f"stop band {lo / 1e9:.5f} - {hi / 1e9:.5f} GHz, width {(hi - lo) / 1e6:.1f} MHz")
print(f"centre {(lo + hi) / 2e9:.5f} GHz against v/a = {lattice.center_frequency / 1e9:.5f} GHz")

# the mass loading pulls the Bragg frequency below v/a by roughly m * delta
k = np.linspace(0.95, 1.0, 6) * lattice.k_period
acoustic, optical = dispersion(lattice, k)
print("\nk/k_Bragg  f_lower/GHz  f_upper/GHz")
for kk, a, b in zip(k / lattice.k_period, acoustic.frequency, optical.frequency):
    print(f"{kk:9.3f}  {a / 1e9:11.5f}  {b / 1e9:11.5f}")

print("\n  i   f/GHz      Q(complex)  Q(energy)")
qnms = find_qnms(lattice, (3.20e9, 3.36e9))
for q in qnms:
    print(f"{q.i:+3d}  {q.frequency / 1e9:.5f}  {q.quality:10.0f}  {quality_factor(q, lattice):9.0f}")

# the finite aperture confines j = 1 and j = 3 only
print("\ntransverse orders:", [t.j for t in transverse_modes(lattice)])
for t in transverse_modes(lattice):
    q = next(q for q in qnms if q.i == 0)
    print(f"(0,{t.j}) at {mode_frequency_2d(q, t) / 1e9:.5f} GHz")

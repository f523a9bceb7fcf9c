"""Atom-mode couplings of the assembled device and the parity selection rules.

Run with ``python demos/02_couplings.py``.
"""

import math

from sawcrystal import LatticeSpec, TransmonSpec, build_device

device = build_device(LatticeSpec(), TransmonSpec())
print(" (i,j)   f/GHz      Q     V/uV    g/2pi (MHz)")
for m in sorted(device.modes, key=lambda m: m.frequency):
    print(f"({m.i:+d},{m.j})  {m.frequency / 1e9:.5f}  {m.quality:5.0f}  "
          f"{abs(m.potential) * 1e6:7.3f}  {m.g / (2 * math.pi) / 1e6:8.2f}")

g01 = device.find(0, 1).g
print("\nratios to g(0,1):")
for key in [(0, 3), (-2, 1), (2, 1)]:
    print(f"  {key}: {device.find(*key).g / g01:.3f}")

# odd ladder indices and even transverse orders are filtered out as uncoupled
print("\nmodes kept:", len(device.modes))
print("collective coupling sqrt(sum g^2)/2pi = "
      f"{math.sqrt(sum(m.g**2 for m in device.modes)) / (2 * math.pi) / 1e6:.1f} MHz")

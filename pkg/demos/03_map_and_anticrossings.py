"""Flux-frequency transmission map and anticrossing extraction.

The full device has many modes within a coupling strength of each other, so
the map shows a collective repulsion rather than four isolated anticrossings.
The second half keeps only four modes with weaker couplings to show the
isolated case.

Run with ``python demos/03_map_and_anticrossings.py``.
"""

import dataclasses
import math
import time

from sawcrystal import (
    LatticeSpec,
    SweepSpec,
    TransmonSpec,
    build_device,
    extract_anticrossing,
    qubit_frequency,
    simulate_map,
)
from sawcrystal.errors import FitError

KEYS = [(-2, 1), (0, 1), (0, 3), (2, 1)]


def report(device, label):
    tr = device.transmon
    sweep = SweepSpec.covering(tr, (3.20e9, 3.35e9))
    t0 = time.perf_counter()
    t_map = simulate_map(device, sweep, threads=8)
    print(f"\n{label}: {t_map.shape[0]}x{t_map.shape[1]} map in {time.perf_counter() - t0:.2f} s")
    for key in KEYS:
        mode = device.find(*key)
        half = max(15e6, 1.5 * mode.g / (2 * math.pi) + tr.gamma2 / (2 * math.pi))
        try:
            fit = extract_anticrossing(sweep.flux, sweep.frequency, t_map,
                                       (mode.frequency - half, mode.frequency + half),
                                       lambda p: qubit_frequency(tr, p),
                                       mode_frequency=mode.frequency, mode_tolerance=5e6)
        except FitError as exc:
            print(f"  {key}: no fit ({exc})")
            continue
        print(f"  {key}: model {mode.frequency / 1e9:.4f} GHz, g/2pi {mode.g / 2 / math.pi / 1e6:.1f} MHz"
              f" | fitted {fit.mode_frequency / 1e9:.4f} GHz, g/2pi {fit.g / 2 / math.pi / 1e6:.1f} MHz")


device = build_device(LatticeSpec(), TransmonSpec())
report(device, "full device")

g_hz = {(-2, 1): 18e6, (0, 1): 53e6, (0, 3): 17e6, (2, 1): 6e6}
modes = tuple(dataclasses.replace(device.find(*k), g=2 * math.pi * g) for k, g in g_hz.items())
report(dataclasses.replace(device, modes=modes), "four modes, rescaled couplings")

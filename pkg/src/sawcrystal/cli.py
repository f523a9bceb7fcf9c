"""Command-line entry point: ``sawcrystal <command> [options]``.

Every command writes its CSV files and a ``manifest.json`` into ``--out``.
Exit codes: 0 ok, 2 configuration error, 3 numerical or fit error,
4 acceptance failure (``reproduce-paper`` only).
"""

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import fitting
from . import io as sio
from . import lattice as lat
from . import transmon as tmn
from .config import parse_config
from .errors import ConfigError, SawCrystalError
from .spectroscopy import SOLVERS, assemble_device, simulate_map, simulate_trace

COMMANDS = ("dispersion", "modes", "couplings", "trace", "map", "fit-lorentzian",
            "fit-anticrossing", "fit-q", "reproduce-paper")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4

log = logging.getLogger("sawcrystal")


def build_parser():
    p = argparse.ArgumentParser(prog="sawcrystal", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML configuration (default: reference device)")
    p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    p.add_argument("--solver", choices=SOLVERS, help="overrides solver.method")
    p.add_argument("--threads", type=int, help="overrides solver.threads")
    p.add_argument("--tolerance-profile", choices=("strict", "paper"),
                   help="overrides tolerances.profile")
    p.add_argument("--phi", type=float, help="flux bias for 'trace' (flux quanta)")
    p.add_argument("--f-atom", type=float, help="bare atom frequency for 'trace', Hz")
    p.add_argument("--input", help="CSV read by the fit commands")
    p.add_argument("--f-window", type=float, nargs=2, metavar=("F_MIN", "F_MAX"),
                   help="frequency window (Hz) for 'fit-anticrossing'")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _records(path, records):
    """Fit reports: blank-line separated blocks of ``key: value`` lines."""
    blocks = []
    for rec in records:
        blocks.append("\n".join(f"{k}: {_fmt(v)}" for k, v in rec.items()))
    text = "\n\n".join(blocks) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def _fmt(v):
    if isinstance(v, float):
        return sio.FMT % v
    return str(v)


def _config(args):
    cfg = parse_config(args.config)
    overrides = {}
    if args.solver:
        overrides["method"] = args.solver
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        cfg = cfg.with_overrides("solver", **overrides)
    if args.tolerance_profile:
        cfg = cfg.with_overrides("tolerances", profile=args.tolerance_profile)
    return cfg


def _need_input(args):
    if not args.input:
        raise ConfigError(f"'{args.command}' needs --input")
    if not os.path.exists(args.input):
        raise ConfigError(f"input file {args.input!r} does not exist")
    return args.input


def cmd_dispersion(cfg, args, out, manifest):
    lattice = cfg.lattice
    k = np.linspace(0.9 * lattice.k_period, lattice.k_period, 201)
    acoustic, optical = lat.dispersion(lattice, k)
    manifest.outputs.append(sio.write_csv(os.path.join(out, "dispersion.csv"),
                                          sio.DISPERSION_COLUMNS,
                                          np.column_stack([k, acoustic.frequency,
                                                           optical.frequency])))
    if lattice.speed_reduction > 0:
        lo, hi = lat.band_gap(lattice)
        manifest.extra["band_gap_Hz"] = [lo, hi]
        print(f"stop band {lo:.9g} - {hi:.9g} Hz (centre {(lo + hi) / 2:.9g} Hz, "
              f"v/a {lattice.center_frequency:.9g} Hz)")
    return EXIT_OK


def cmd_modes(cfg, args, out, manifest):
    device = assemble_device(cfg)
    manifest.outputs.append(sio.write_modes(os.path.join(out, "modes.csv"), device.modes))
    manifest.outputs.append(sio.write_csv(
        os.path.join(out, "qnm_1d.csv"), sio.MODE_COLUMNS,
        [(q.i, 1, q.frequency, q.quality, q.kx) for q in device.qnms]))
    os.makedirs(os.path.join(out, "fields"), exist_ok=True)
    for i in sorted({m.i for m in device.modes}):
        q = next(q for q in device.qnms if q.i == i)
        manifest.outputs.append(sio.write_field(os.path.join(out, "fields", f"field_i{i}.csv"), q))
    for m in device.modes:
        print(f"({m.i:+d},{m.j}) f = {m.frequency / 1e9:.6f} GHz  Q = {m.quality:.0f}")
    return EXIT_OK


def cmd_couplings(cfg, args, out, manifest):
    device = assemble_device(cfg)
    manifest.outputs.append(sio.write_couplings(os.path.join(out, "couplings.csv"), device.modes))
    for m in device.modes:
        print(f"({m.i:+d},{m.j}) f = {m.frequency / 1e9:.6f} GHz  "
              f"g/2pi = {m.g / (2 * math.pi) / 1e6:.3f} MHz")
    return EXIT_OK


def cmd_trace(cfg, args, out, manifest):
    device = assemble_device(cfg)
    if args.phi is not None and args.f_atom is not None:
        raise ConfigError("give either --phi or --f-atom, not both")
    if args.f_atom is not None:
        phi = tmn.flux_for_frequency(cfg.transmon, args.f_atom)
    else:
        phi = args.phi if args.phi is not None else 0.0
    f = cfg.sweep().frequency
    t = simulate_trace(device, phi, f, cfg.drive_amplitude, cfg.solver, cfg.n_max,
                       cfg.dimension_cap)
    manifest.extra.update(phi=phi, f_atom_Hz=tmn.qubit_frequency(cfg.transmon, phi),
                          solver=cfg.solver)
    manifest.outputs.append(sio.write_trace(os.path.join(out, "trace.csv"), f, t))
    return EXIT_OK


def cmd_map(cfg, args, out, manifest):
    device = assemble_device(cfg)
    sweep = cfg.sweep()
    t_map = simulate_map(device, sweep, cfg.solver, cfg.threads, cfg.n_max, cfg.dimension_cap)
    manifest.outputs.append(sio.write_map(os.path.join(out, "map.csv"), sweep.flux,
                                          sweep.frequency, t_map))
    manifest.outputs.append(sio.write_csv(
        os.path.join(out, "flux_frequency.csv"), sio.FLUX_COLUMNS,
        np.column_stack([sweep.flux, tmn.qubit_frequency(cfg.transmon, sweep.flux)])))
    manifest.extra.update(device_hash=cfg.hash(), solver=cfg.solver,
                          tolerance_profile=cfg.tolerance_profile,
                          flux_grid=[sweep.flux[0], sweep.flux[-1], sweep.flux.size],
                          frequency_grid=[sweep.frequency[0], sweep.frequency[-1],
                                          sweep.frequency.size])
    return EXIT_OK


def cmd_fit_lorentzian(cfg, args, out, manifest):
    f, t = sio.read_trace(_need_input(args))
    fit = fitting.fit_lorentzian(f, t)
    text = _records(os.path.join(out, "fit_lorentzian.txt"), [{
        "record": "lorentzian", "center_Hz": fit.center, "half_width_Hz": fit.half_width,
        "depth": fit.depth, "baseline": fit.baseline, "residual": fit.residual,
        "gamma1_over_2pi_Hz": fit.gamma1 / (2 * math.pi),
        "gamma2_over_2pi_Hz": fit.gamma2 / (2 * math.pi)}])
    print(text, end="")
    return EXIT_OK


def cmd_fit_anticrossing(cfg, args, out, manifest):
    phi, f, t = sio.read_map(_need_input(args))
    window = tuple(args.f_window) if args.f_window else (f[0], f[-1])
    fit = fitting.extract_anticrossing(phi, f, t, window,
                                       lambda p: tmn.qubit_frequency(cfg.transmon, p))
    text = _records(os.path.join(out, "fit_anticrossing.txt"), [{
        "record": "anticrossing", "crossing_flux": fit.crossing_flux,
        "mode_frequency_Hz": fit.mode_frequency, "g_over_2pi_Hz": fit.g / (2 * math.pi),
        "residual_Hz": fit.residual, "columns": fit.columns}])
    print(text, end="")
    return EXIT_OK


def cmd_fit_q(cfg, args, out, manifest):
    d = sio.read_csv(_need_input(args))
    y = d["abs_t"] if "abs_t" in d else d.get("abs_r")
    if y is None:
        raise ConfigError(f"{args.input}: needs an 'abs_t' or 'abs_r' column")
    fits = fitting.fit_q_from_dip(d["f_Hz"], y)
    text = _records(os.path.join(out, "fit_q.txt"), [
        {"record": "dip", "center_Hz": x.center, "half_width_Hz": x.half_width,
         "depth": x.depth, "Q": x.quality, "residual": x.residual} for x in fits])
    print(text, end="")
    return EXIT_OK


def cmd_reproduce(cfg, args, out, manifest):
    from . import reproduce

    checks = reproduce.run_acceptance(cfg.tolerance_profile, cfg.threads)
    device = checks[1].data["device"]
    manifest.outputs.append(sio.write_modes(os.path.join(out, "modes.csv"), device.modes))
    manifest.outputs.append(sio.write_couplings(os.path.join(out, "couplings.csv"), device.modes))
    ladder = sorted(checks[2].data["modes"].values(), key=lambda q: q.frequency)
    manifest.outputs.append(sio.write_csv(
        os.path.join(out, "qnm_quality.csv"), sio.MODE_COLUMNS,
        [(q.i, 1, q.frequency, q.quality, q.kx) for q in ladder]))
    m = checks[7].data
    manifest.outputs.append(sio.write_map(os.path.join(out, "map.csv"), m["sweep"].flux,
                                          m["sweep"].frequency, m["map"]))
    lines = [c.line() for c in checks]
    with open(os.path.join(out, "acceptance.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    manifest.outputs.append(os.path.join(out, "acceptance.txt"))
    manifest.extra["acceptance"] = {c.number: c.passed for c in checks}
    print("\n".join(lines))
    failed = [c.number for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} criteria pass"
          + (f"; failing: {', '.join(failed)}" if failed else ""))
    return EXIT_ACCEPTANCE if failed else EXIT_OK


HANDLERS = {
    "dispersion": cmd_dispersion,
    "modes": cmd_modes,
    "couplings": cmd_couplings,
    "trace": cmd_trace,
    "map": cmd_map,
    "fit-lorentzian": cmd_fit_lorentzian,
    "fit-anticrossing": cmd_fit_anticrossing,
    "fit-q": cmd_fit_q,
    "reproduce-paper": cmd_reproduce,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"sawcrystal: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        manifest = sio.RunManifest.for_config(args.command, cfg)
        status = HANDLERS[args.command](cfg, args, args.out, manifest)
        manifest.write(args.out)
        return status
    except ConfigError as exc:
        print(f"sawcrystal {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SawCrystalError as exc:
        print(f"sawcrystal {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"sawcrystal {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""YAML run configuration with explicit physical units.

Every dimensional value is written as ``"<number> <unit>"``, e.g.
``period: 0.475 um`` or ``Gamma1: 8 MHz``.  Rates (``Gamma1``, ``Gamma2``,
``Omega``) are given as ``rate / 2 pi`` in frequency units.  Any key left out
takes the default of the reference device; an empty file is the full
reference device.  Errors name the offending key and its line.

Example::

    lattice:
      a: 0.95 um        # electrical period; give either a or P
      N_p: 140          # electrode pairs; give either N_p or N
      m: 0.65
      v: 3160 m/s
      delta: 0.02
      W: 12 um
    transmon:
      EJ_max: 9.6 GHz
      EC_pair: 0.78 GHz
      Gamma1: 8 MHz
"""

import hashlib
import json
import math
import re
from dataclasses import dataclass

import yaml

from .coupling import PiezoConstants
from .errors import ConfigError, SawCrystalError
from .lattice import LatticeSpec
from .spectroscopy import SOLVERS, SweepSpec
from .transmon import CONVENTIONS, TransmonSpec

PREFIX = {"": 1.0, "T": 1e12, "G": 1e9, "M": 1e6, "k": 1e3, "m": 1e-3, "u": 1e-6,
          "µ": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15, "a": 1e-18}

# base unit of every dimensional kind and non-prefixed aliases
UNITS = {
    "length": ("m", {}),
    "speed": ("m/s", {"km/s": 1e3}),
    "frequency": ("Hz", {}),
    "capacitance": ("F", {}),
    "field": ("V/m", {}),
    "density": ("kg/m^3", {"kg/m3": 1.0, "g/cm^3": 1e3, "g/cm3": 1e3}),
}

PROFILES = ("paper", "strict")

# section -> key -> (kind, default in SI); kinds other than UNITS are plain
SCHEMA = {
    "lattice": {
        "P": ("length", 0.475e-6),
        "a": ("length", None),
        "N": ("int", 280),
        "N_p": ("int", None),
        "m": ("float", 0.65),
        "v": ("speed", 3160.0),
        "delta": ("float", 0.02),
        "W": ("length", 12e-6),
    },
    "transmon": {
        "EJ_max": ("frequency", 9.6e9),
        "EC_pair": ("frequency", 0.78e9),
        "C_q": ("capacitance", 83e-15),
        "C_g": ("capacitance", 14e-15),
        "Gamma1": ("frequency", 8e6),
        "Gamma2": ("frequency", 11e6),
        "ec_convention": ("str", "single"),
    },
    "piezo": {
        "epz_over_eps": ("field", 1.6e9),
        "rho": ("density", 2650.0),
    },
    "drive": {
        "Omega": ("frequency", 100e3),
    },
    "sweep": {
        "flux_start": ("float", None),
        "flux_stop": ("float", None),
        "flux_points": ("int", 201),
        "f_start": ("frequency", 3.20e9),
        "f_stop": ("frequency", 3.35e9),
        "f_points": ("int", 401),
    },
    "modes": {
        "f_min": ("frequency", 3.20e9),
        "f_max": ("frequency", 3.35e9),
        "min_relative_coupling": ("float", 1e-6),
    },
    "solver": {
        "method": ("str", "semiclassical"),
        "n_max": ("int", 2),
        "dimension_cap": ("int", 1024),
        "threads": ("int", 1),
    },
    "tolerances": {
        "profile": ("str", "paper"),
    },
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def _unit_factor(kind, unit):
    base, aliases = UNITS[kind]
    if unit in aliases:
        return aliases[unit]
    if unit.endswith(base):
        prefix = unit[: len(unit) - len(base)]
        if prefix in PREFIX:
            return PREFIX[prefix]
    return None


def parse_quantity(text, kind, key=None, line=None):
    """``"0.475 um"`` -> ``4.75e-07`` for ``kind="length"``."""
    if isinstance(text, bool):
        raise ConfigError(f"expected a {kind} with unit, got {text!r}", key, line)
    if isinstance(text, (int, float)):
        raise ConfigError(f"missing unit: {kind} values need an explicit unit "
                          f"(e.g. '{text} {UNITS[kind][0]}')", key, line)
    match = _NUMBER.match(str(text))
    if not match:
        raise ConfigError(f"cannot read {text!r} as '<number> <unit>'", key, line)
    number, unit = float(match.group(1)), match.group(2)
    if not unit:
        raise ConfigError(f"missing unit in {text!r}", key, line)
    factor = _unit_factor(kind, unit)
    if factor is None:
        raise ConfigError(f"unit mismatch: '{unit}' is not a {kind} unit "
                          f"(base unit {UNITS[kind][0]})", key, line)
    return number * factor


def _plain(value, kind, key, line):
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key, line)
        return value
    if isinstance(value, str):
        # YAML 1.1 reads exponents without a dot ("1e-06") as strings
        try:
            value = int(value) if kind == "int" and value.strip().lstrip("+-").isdigit() \
                else float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a plain number, got {value!r}", key, line)
    if kind == "int":
        if int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", key, line)
        return int(value)
    return float(value)


def _construct(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


def _read_tree(text):
    """``{section: {key: (value, line)}}`` plus section lines."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {exc}", line=mark.line + 1 if mark else None)
    tree = {}
    if root is None:
        return tree
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError("top level must be a mapping of sections", line=root.start_mark.line + 1)
    for knode, vnode in root.value:
        section = _construct(knode)
        sline = knode.start_mark.line + 1
        if section not in SCHEMA:
            raise ConfigError(f"unknown section (expected one of {sorted(SCHEMA)})", section, sline)
        if section in tree:
            raise ConfigError("duplicate section", section, sline)
        entries = {}
        if isinstance(vnode, yaml.ScalarNode) and _construct(vnode) is None:
            tree[section] = entries
            continue
        if not isinstance(vnode, yaml.MappingNode):
            raise ConfigError("section must be a mapping", section, sline)
        for kn, vn in vnode.value:
            key = _construct(kn)
            line = kn.start_mark.line + 1
            dotted = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key (expected one of {sorted(SCHEMA[section])})",
                                  dotted, line)
            if key in entries:
                raise ConfigError("duplicate key", dotted, line)
            if not isinstance(vn, yaml.ScalarNode):
                raise ConfigError("value must be a scalar", dotted, line)
            entries[key] = (_construct(vn), line)
        tree[section] = entries
    return tree


@dataclass(frozen=True, eq=False)
class Config:
    """Validated run configuration; ``values`` holds every resolved SI value."""

    values: dict
    lattice: LatticeSpec
    transmon: TransmonSpec
    piezo: PiezoConstants
    lines: dict

    @property
    def drive_amplitude(self):
        return 2 * math.pi * self.values["drive"]["Omega"]

    @property
    def mode_window(self):
        m = self.values["modes"]
        return (m["f_min"], m["f_max"])

    @property
    def min_relative_coupling(self):
        return self.values["modes"]["min_relative_coupling"]

    @property
    def solver(self):
        return self.values["solver"]["method"]

    @property
    def n_max(self):
        return self.values["solver"]["n_max"]

    @property
    def dimension_cap(self):
        return self.values["solver"]["dimension_cap"]

    @property
    def threads(self):
        return self.values["solver"]["threads"]

    @property
    def tolerance_profile(self):
        return self.values["tolerances"]["profile"]

    def sweep(self):
        """:class:`SweepSpec`; without an explicit flux range the atom is
        swept across the frequency window."""
        s = self.values["sweep"]
        f_range = (s["f_start"], s["f_stop"])
        if s["flux_start"] is None:
            return SweepSpec.covering(self.transmon, f_range, s["flux_points"], s["f_points"],
                                      drive_amplitude=self.drive_amplitude)
        return SweepSpec.linear((s["flux_start"], s["flux_stop"]), s["flux_points"], f_range,
                                s["f_points"], drive_amplitude=self.drive_amplitude)

    def derived(self):
        """Quantities echoed into every manifest."""
        return {"L_m": self.lattice.length, "f_ac_Hz": self.lattice.center_frequency,
                "n_eff": self.lattice.effective_index,
                "f_max_atom_Hz": self.transmon.max_frequency}

    def hash(self):
        """SHA-256 of the resolved values; independent of key order in the file."""
        blob = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, section, **kwargs):
        values = {s: dict(v) for s, v in self.values.items()}
        values[section].update(kwargs)
        return _build(values, self.lines)


def _resolve(tree):
    values = {}
    lines = {}
    for section, keys in SCHEMA.items():
        given = tree.get(section, {})
        out = {}
        for key, (kind, default) in keys.items():
            if key in given:
                raw, line = given[key]
                lines[f"{section}.{key}"] = line
                out[key] = (parse_quantity(raw, kind, f"{section}.{key}", line) if kind in UNITS
                            else _plain(raw, kind, f"{section}.{key}", line))
            else:
                out[key] = default
        values[section] = out

    lt = values["lattice"]
    for short, long_, factor in (("P", "a", 2), ("N", "N_p", 2)):
        if f"lattice.{short}" in lines and f"lattice.{long_}" in lines:
            raise ConfigError(f"give either '{short}' or '{long_}', not both",
                              f"lattice.{long_}", lines[f"lattice.{long_}"])
        if lt[long_] is not None:
            lt[short] = lt[long_] / factor if short == "P" else lt[long_] * factor
        lt.pop(long_)
    sw = values["sweep"]
    if (sw["flux_start"] is None) != (sw["flux_stop"] is None):
        key = "sweep.flux_start" if sw["flux_start"] is not None else "sweep.flux_stop"
        raise ConfigError("flux_start and flux_stop must be given together", key, lines.get(key))
    return values, lines


def _build(values, lines):
    def fail(exc, section, keys):
        key = next((f"{section}.{k}" for k in keys if f"{section}.{k}" in lines), section)
        raise ConfigError(f"constraint violated: {exc}", key, lines.get(key)) from exc

    lt, tr, pz = values["lattice"], values["transmon"], values["piezo"]
    try:
        lattice = LatticeSpec(period=lt["P"], cells=lt["N"], metallization=lt["m"],
                              speed=lt["v"], speed_reduction=lt["delta"], aperture=lt["W"])
    except SawCrystalError as exc:
        fail(exc, "lattice", list(lt))
    if lattice.cells % 2:
        fail(ValueError("N must be even (whole electrode pairs)"), "lattice", ["N", "N_p"])
    try:
        transmon = TransmonSpec(ej_max=tr["EJ_max"], ec_pair=tr["EC_pair"], c_q=tr["C_q"],
                                c_g=tr["C_g"], gamma1=2 * math.pi * tr["Gamma1"],
                                gamma2=2 * math.pi * tr["Gamma2"],
                                ec_convention=tr["ec_convention"])
    except SawCrystalError as exc:
        fail(exc, "transmon", list(tr))
    try:
        piezo = PiezoConstants(epz_over_eps=pz["epz_over_eps"], density=pz["rho"])
    except SawCrystalError as exc:
        fail(exc, "piezo", list(pz))

    checks = [
        ("drive.Omega", values["drive"]["Omega"] > 0, "must be positive"),
        ("sweep.flux_points", values["sweep"]["flux_points"] >= 2, "must be >= 2"),
        ("sweep.f_points", values["sweep"]["f_points"] >= 2, "must be >= 2"),
        ("sweep.f_stop", values["sweep"]["f_stop"] > values["sweep"]["f_start"],
         "must exceed f_start"),
        ("modes.f_max", values["modes"]["f_max"] > values["modes"]["f_min"] > 0,
         "need 0 < f_min < f_max"),
        ("modes.min_relative_coupling", 0 <= values["modes"]["min_relative_coupling"] < 1,
         "must lie in [0, 1)"),
        ("solver.method", values["solver"]["method"] in SOLVERS, f"must be one of {SOLVERS}"),
        ("solver.n_max", values["solver"]["n_max"] >= 1, "must be >= 1"),
        ("solver.dimension_cap", values["solver"]["dimension_cap"] >= 2, "must be >= 2"),
        ("solver.threads", values["solver"]["threads"] >= 1, "must be >= 1"),
        ("tolerances.profile", values["tolerances"]["profile"] in PROFILES,
         f"must be one of {PROFILES}"),
        ("transmon.ec_convention", tr["ec_convention"] in CONVENTIONS,
         f"must be one of {CONVENTIONS}"),
    ]
    sw = values["sweep"]
    if sw["flux_start"] is not None:
        checks.append(("sweep.flux_stop", sw["flux_stop"] > sw["flux_start"],
                       "must exceed flux_start"))
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(f"constraint violated: {msg}", key, lines.get(key))
    return Config(values=values, lattice=lattice, transmon=transmon, piezo=piezo, lines=lines)


def loads(text):
    """Parse configuration text."""
    values, lines = _resolve(_read_tree(text))
    return _build(values, lines)


def parse_config(path=None):
    """Parse a configuration file; ``None`` gives the reference device."""
    if path is None:
        return loads("")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}")
    return loads(text)


def default_config():
    return loads("")


def dumps(config):
    """Serialize resolved values with explicit base units (exact round trip)."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"{section}:")
        for key, (kind, _) in keys.items():
            if key not in config.values[section]:
                continue
            value = config.values[section][key]
            if value is None:
                continue
            if kind in UNITS:
                text = f"{float(value)!r} {UNITS[kind][0]}"
            elif kind == "str":
                text = json.dumps(value)
            else:
                text = repr(value)
            lines.append(f"  {key}: {text}")
    return "\n".join(lines) + "\n"

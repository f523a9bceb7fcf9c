"""CSV export/import and run manifests.

Numbers are written with 12 significant digits (``%.12g``), which is enough
for every fit to reproduce within its tolerance after re-ingestion.  CSV
content never contains timestamps, so identical inputs give identical bytes.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata

import numpy as np

from .errors import ConfigError

FMT = "%.12g"

MODE_COLUMNS = ("i", "j", "f_Hz", "Q", "kx_rad_per_m")
COUPLING_COLUMNS = ("i", "j", "f_Hz", "Q", "V_volts", "g_over_2pi_Hz")
TRACE_COLUMNS = ("f_Hz", "re_t", "im_t", "abs_t", "arg_t")
MAP_COLUMNS = ("phi", "f_Hz", "re_t", "im_t", "abs_t", "arg_t")
FIELD_COLUMNS = ("x_m", "re_A", "im_A")
DISPERSION_COLUMNS = ("k_rad_per_m", "f_lower_Hz", "f_upper_Hz")
FLUX_COLUMNS = ("phi", "f_atom_Hz")


def version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def write_csv(path, columns, data):
    """Write ``data`` (rows x len(columns)) with a one-line header."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(0 if data.size == 0 else -1, len(columns))
    if data.shape[1:] != (len(columns),) and data.size:
        raise ValueError(f"data has {data.shape[1]} columns, header has {len(columns)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in data:
            fh.write(",".join(FMT % v for v in row) + "\n")
    return path


def read_csv(path):
    """``{column: array}`` from a file written by :func:`write_csv`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size and data.shape[1] != len(header):
        raise ConfigError(f"{path}: {data.shape[1]} columns but header lists {len(header)}")
    return {name: (data[:, n] if data.size else np.zeros(0)) for n, name in enumerate(header)}


def complex_columns(t):
    t = np.asarray(t, dtype=complex)
    return [t.real, t.imag, np.abs(t), np.angle(t)]


def write_modes(path, modes):
    rows = [(m.i, m.j, m.frequency, m.quality, m.kx) for m in modes]
    return write_csv(path, MODE_COLUMNS, rows)


def write_couplings(path, modes):
    rows = [(m.i, m.j, m.frequency, m.quality, m.potential, m.g / (2 * math.pi)) for m in modes]
    return write_csv(path, COUPLING_COLUMNS, rows)


def write_field(path, mode):
    return write_csv(path, FIELD_COLUMNS, np.column_stack([mode.x, mode.field.real,
                                                           mode.field.imag]))


def write_trace(path, f, t):
    return write_csv(path, TRACE_COLUMNS, np.column_stack([f] + complex_columns(t)))


def write_map(path, phi, f, t_map):
    """Long format: one row per (flux, frequency), flux-major."""
    t_map = np.asarray(t_map)
    pp, ff = np.meshgrid(phi, f, indexing="ij")
    cols = [pp.ravel(), ff.ravel()] + complex_columns(t_map.ravel())
    return write_csv(path, MAP_COLUMNS, np.column_stack(cols))


def read_trace(path):
    d = read_csv(path)
    if "re_t" in d and "im_t" in d:
        return d["f_Hz"], d["re_t"] + 1j * d["im_t"]
    if "abs_t" in d:
        return d["f_Hz"], d["abs_t"]
    raise ConfigError(f"{path}: no transmission columns")


def read_map(path):
    """``(phi, f, t_map)`` from a long-format map file."""
    d = read_csv(path)
    phi = np.unique(d["phi"])
    f = np.unique(d["f_Hz"])
    if phi.size * f.size != d["phi"].size:
        raise ConfigError(f"{path}: rows do not form a full flux x frequency grid")
    order = np.lexsort((d["f_Hz"], d["phi"]))
    t = (d["re_t"] + 1j * d["im_t"])[order].reshape(phi.size, f.size)
    return phi, f, t


@dataclass
class RunManifest:
    """Sidecar metadata written next to every output."""

    command: str
    config: dict
    config_hash: str
    derived: dict
    version: str = field(default_factory=version)
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str = ""
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @classmethod
    def for_config(cls, command, config, **extra):
        return cls(command=command, config=config.values, config_hash=config.hash(),
                   derived=config.derived(), extra=extra)

    def write(self, directory, name="manifest.json"):
        self.finished = datetime.now(timezone.utc).isoformat()
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
        return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")

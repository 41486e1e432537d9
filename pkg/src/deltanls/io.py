"""Result persistence: versioned state files, JSON reports, CSV curves.

A state file is a single text file: line 1 is a JSON header (format tag,
code version, physical parameters, grid descriptor, lam, q, resolved
config), the rest is a CSV body `r,phi` with full-precision floats.  CSV
curve files embed the same header as `#`-prefixed comment lines so every
artifact is reproducible from its own metadata.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .functionals import DecomposedState
from .grid import RadialField, build_grid
from .special import PhysicalParams

_FMT = "%.17g"
STATE_FORMAT = "deltanls-state-v1"


def write_json(path, payload: dict):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_csv(path, columns: dict[str, np.ndarray], meta: dict | None = None):
    """Write named columns with an embedded JSON metadata comment line."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    rows = arrays[0].shape[0]
    with path.open("w") as fh:
        if meta is not None:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join(names) + "\n")
        for i in range(rows):
            fh.write(",".join(_FMT % a[i] for a in arrays) + "\n")


def read_csv(path):
    """Inverse of write_csv: returns (columns dict, meta dict or None)."""
    meta = None
    with Path(path).open() as fh:
        first = fh.readline()
        if first.startswith("#"):
            meta = json.loads(first[1:].strip())
            header = fh.readline()
        else:
            header = first
        names = header.strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, k] for k, name in enumerate(names)}, meta


def save_state(path, state: DecomposedState, params: PhysicalParams,
               omega: float = math.nan, extra: dict | None = None):
    grid = state.grid
    header = {
        "format": STATE_FORMAT,
        "version": __version__,
        "p": params.p,
        "alpha": params.alpha,
        "lam": state.lam,
        "q": state.q,
        "omega": omega,
        "grid": {"R": grid.truncation_radius, "n": grid.n, "r_min": grid.r_min},
    }
    if extra:
        header.update(extra)
    with Path(path).open("w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        fh.write("r,phi\n")
        for r, v in zip(grid.nodes, state.phi.values):
            fh.write(f"{_FMT % r},{_FMT % v}\n")


def load_state(path):
    """Returns (state, params, header)."""
    with Path(path).open() as fh:
        header = json.loads(fh.readline())
        if header.get("format") != STATE_FORMAT:
            raise ConfigError(f"{path}: not a {STATE_FORMAT} file")
        fh.readline()  # column names
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    gdesc = header["grid"]
    grid = build_grid(gdesc["R"], int(gdesc["n"]), gdesc["r_min"])
    if not np.allclose(grid.nodes, data[:, 0], rtol=1e-12, atol=0):
        raise ConfigError(f"{path}: stored nodes do not match the grid descriptor")
    params = PhysicalParams(p=header["p"], alpha=header["alpha"])
    state = DecomposedState(
        lam=header["lam"], q=header["q"], phi=RadialField(grid, data[:, 1])
    )
    return state, params, header

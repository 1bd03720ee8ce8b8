"""Flat-file serialization: CSV/JSON tables, manifests and contour matrices.

Every file carries the tool version, the seed and a hash of the run
configuration. Nothing time- or host-dependent is written, so identical
configurations give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .curve import GridSpec, MinimizerConfig, mirror_half

SURFACE_FILE = "surface.csv"
MANIFEST_FILE = "manifest.json"
SURFACE_COLUMNS = ("rbar", "z", "e_curve", "e_roof", "c_roof", "a", "b", "c", "d", "e", "f", "converged", "grad_norm")


def fmt(x):
    """Number formatting used in all text outputs (17 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x + 0.0:.17g}"


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(config):
    return {"tool": "qutrit-roof", "version": __version__, "seed": config.get("seed"), "config_hash": config_hash(config)}


def _header_lines(config):
    p = provenance(config)
    return [
        f"# {p['tool']} {p['version']}",
        f"# config_hash={p['config_hash']} seed={p['seed']}",
        "# config=" + json.dumps(config, sort_keys=True, separators=(",", ":")),
    ]


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_table(path, columns, rows, config, fmt_name="csv"):
    """Write ``rows`` (sequences matching ``columns``) as CSV with a comment header, or as JSON."""
    path = Path(path)
    if fmt_name == "json":
        doc = {"meta": {**provenance(config), "config": config}, "columns": list(columns),
               "rows": [dict(zip(columns, r)) for r in rows]}
        path.write_text(dumps_json(doc))
        return path
    buf = io.StringIO()
    buf.write("\n".join(_header_lines(config)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    path.write_text(buf.getvalue())
    return path


def write_json(path, obj, config):
    path = Path(path)
    path.write_text(dumps_json({"meta": {**provenance(config), "config": config}, **obj}))
    return path


def write_matrix(path, matrix, rbar, z, config, name):
    """Contour-ready matrix: row ``i`` is ``z[i]``, column ``j`` is ``rbar[j]``."""
    lines = _header_lines(config) + [
        f"# {name}: rows z, columns rbar",
        "# rbar " + " ".join(fmt(v) for v in rbar),
        "# z " + " ".join(fmt(v) for v in z),
    ]
    body = [" ".join(fmt(v) for v in row) for row in np.asarray(matrix)]
    Path(path).write_text("\n".join(lines + body) + "\n")


def read_table(path):
    """Read a CSV written by :func:`write_table`; returns ``(columns, rows, config)``."""
    path = Path(path)
    config = None
    lines = []
    for line in path.read_text().splitlines():
        if line.startswith("# config="):
            config = json.loads(line[len("# config="):])
        elif not line.startswith("#"):
            lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    return columns, [r for r in reader if r], config


def read_surface(directory):
    """Rebuild the mirrored :class:`~qutrit_roof.curve.Surface` from ``surface.csv``."""
    path = Path(directory) / SURFACE_FILE
    columns, rows, config = read_table(path)
    if tuple(columns) != SURFACE_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {columns}")
    data = np.array([[float(v) for v in r] for r in rows])
    rbar = np.unique(data[:, 0])
    z = np.unique(data[:, 1])
    if len(data) != rbar.size * z.size:
        raise ValueError(f"{path}: rows do not form a full grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    data = data[order].reshape(rbar.size, z.size, -1)
    spec = cfg = None
    if config:
        spec = GridSpec(**config["grid"]) if config.get("grid") else None
        cfg = MinimizerConfig(**config["minimizer"]) if config.get("minimizer") else None
    return mirror_half(rbar, z, data[..., 2], data[..., 5:11], data[..., 11] > 0.5, data[..., 12], spec, cfg), config

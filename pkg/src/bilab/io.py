"""Tables, grid files and key-value configuration files."""

from __future__ import annotations

import csv
import io as _io
import json
import sys
from pathlib import Path

import numpy as np

from .core import Box, DomainError, GridDensity, GridPotential, RadialProfile

NUMBER_FORMAT = "%.17g"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    return NUMBER_FORMAT % float(v)


def table_to_csv(columns: dict) -> str:
    """Header row plus one row per entry; floats with 17 significant digits, LF endings."""
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise DomainError("table columns differ in length")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, str):
        return v
    f = float(v)
    if np.isfinite(f):
        return f
    return "nan" if np.isnan(f) else ("inf" if f > 0 else "-inf")


def table_to_json(columns: dict, meta: dict = None) -> str:
    """{"meta": ..., "data": {column: [values]}}; non-finite numbers become strings."""
    data = {k: [_json_value(v) for v in vals] for k, vals in columns.items()}
    return json.dumps({"meta": meta or {}, "data": data}, indent=1, sort_keys=False) + "\n"


def write_table(out, columns: dict, fmt: str = "csv", meta: dict = None) -> None:
    text = table_to_csv(columns) if fmt == "csv" else table_to_json(columns, meta)
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    with open(out, "w", newline="\n") as fh:
        fh.write(text)


def read_csv_table(path) -> dict:
    """Columns of a table written by :func:`write_table` as float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"{path}: empty table")
    names = rows[0]
    body = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(names))
    return {n: body[:, i] for i, n in enumerate(names)}


def read_json_table(path) -> tuple:
    with open(path) as fh:
        obj = json.load(fh)
    data = {k: np.array([float(x) for x in v]) for k, v in obj["data"].items()}
    return obj["meta"], data


def read_radial_file(path, dimension: int = 3) -> RadialProfile:
    """Two-column (r, rho) CSV; a non-numeric first row is taken as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    arr = np.array([[float(x) for x in r[:2]] for r in rows])
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns r, rho")
    return RadialProfile(arr[:, 0], arr[:, 1], dimension)


def write_grid(path, field) -> None:
    """One JSON header line, then the float64 values in C order (little endian)."""
    header = {
        "kind": "potential" if isinstance(field, GridPotential) else "density",
        "dims": list(field.values.shape),
        "spacing": field.spacing,
        "lower": list(field.box.lower),
        "upper": list(field.box.upper),
        "dtype": "<f8",
    }
    if isinstance(field, GridPotential):
        header["lagrangian"] = field.active_lagrangian.describe()
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_grid(path):
    """Inverse of :func:`write_grid`; returns a GridPotential or GridDensity."""
    from .core import Exact, Series, Truncated
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    vals = np.frombuffer(raw[nl + 1:], dtype="<f8").reshape(header["dims"]).astype(float)
    box = Box(tuple(header["lower"]), tuple(header["upper"]))
    h = float(header["spacing"])
    if header.get("kind") == "potential":
        lag = header.get("lagrangian", {"variant": "exact"})
        model = {"exact": lambda d: Exact(),
                 "series": lambda d: Series(d["order"]),
                 "truncated": lambda d: Truncated(d["theta"], d["power"])}[lag["variant"]](lag)
        return GridPotential(box, h, vals, model)
    return GridDensity(box, h, vals)


def parse_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys are normalised to snake_case."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out

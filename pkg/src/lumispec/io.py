"""CSV and JSON writers shared by spectra, estimates and sweeps.

CSV files are comma separated with a header row, '.' decimals, LF line
endings and ``repr``-exact floats so that identical results give identical
bytes.
"""
from __future__ import annotations

import io
import json
import math
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["format_float", "csv_text", "write_csv", "write_json", "provenance", "jsonable"]


def format_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def csv_text(columns: Mapping[str, np.ndarray], comment: str | None = None) -> str:
    """Render equally long 1-D columns as CSV text.

    ``comment`` is written first as a single ``#`` line (gnuplot and
    ``numpy.loadtxt`` skip it).
    """
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")
    buf = io.StringIO(newline="")
    if comment is not None:
        buf.write("# " + comment.replace("\n", " ") + "\n")
    buf.write(",".join(names) + "\n")
    for row in zip(*arrays):
        buf.write(",".join(format_float(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, columns: Mapping[str, np.ndarray], comment: str | None = None) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(csv_text(columns, comment))
    return path


def jsonable(obj):
    """Recursively convert numpy containers and scalars into JSON-native types."""
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else format_float(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    return obj


def write_json(path, document) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(jsonable(document), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def provenance(**extra) -> dict:
    """Tool identification plus caller-supplied context (config echo, seed, ...)."""
    return {"tool": "lumispec", "version": __version__, **extra}

"""CSV, JSON and raw snapshot persistence.

Floats are written with a fixed ``%.15e`` format so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import FourierGrid, SpinorField

FLOAT_FMT = "{:.15e}"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path) -> dict:
    """Read a CSV written by :func:`write_csv` into a dict of float arrays."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = list(zip(*rows)) if rows else [() for _ in header]
    return {h: np.array([float(v) for v in c]) for h, c in zip(header, cols)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_snapshot(path, field: SpinorField, m: float, t: float) -> Path:
    """One JSON header line, then the position-space field as little-endian complex128.

    Array layout is ``(4, N, N, N)`` in C order with each axis in numpy FFT
    order (origin at index 0).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pos = field.to_position().data
    header = {
        "N": field.grid.N,
        "L": field.grid.L,
        "m": float(m),
        "time": float(t),
        "byte_order": "little",
        "dtype": "complex128",
        "shape": [4, field.grid.N, field.grid.N, field.grid.N],
        "space": "position",
        "axis_order": "fft",
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(pos, dtype="<c16").tobytes())
    return path


def read_snapshot(path) -> tuple[dict, SpinorField]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = fh.read()
    data = np.frombuffer(raw, dtype="<c16").reshape(header["shape"]).astype(complex)
    grid = FourierGrid(header["N"], header["L"])
    return header, SpinorField(grid, data, "position")

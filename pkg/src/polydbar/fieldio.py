"""Versioned on-disk format for fields sampled on tensor grids.

Layout::

    POLYDBAR-FIELD 1\\n
    <one line of JSON: kind, n, factors, charts, components, label, dtype>\\n
    <components x prod(shape) complex128 values, little-endian, C order>
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .domain import TensorGrid, build_disc_grid, chart_from_dict
from .fields import Form01Field, ScalarField

MAGIC = "POLYDBAR-FIELD"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<c16")


def _header(grid: TensorGrid, kind: str, components: int, label: str) -> dict:
    return {
        "kind": kind,
        "n": grid.n,
        "factors": [[g.n_radial, g.n_angular, g.grading_exponent] for g in grid.factors],
        "charts": [c.to_dict() for c in grid.charts],
        "components": components,
        "label": label,
        "dtype": "complex128-le",
    }


def write_field(path, field, label: str = "") -> Path:
    """Write a ScalarField or Form01Field; returns the path."""
    if isinstance(field, ScalarField):
        kind, arrays = "scalar", [field.values]
    elif isinstance(field, Form01Field):
        kind, arrays = "form", list(field.coefficients)
    else:
        raise TypeError("expected ScalarField or Form01Field")
    path = Path(path)
    head = json.dumps(_header(field.grid, kind, len(arrays), label), sort_keys=True)
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {FORMAT_VERSION}\n".encode())
        fh.write(head.encode() + b"\n")
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=_DTYPE).tobytes())
    return path


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        return _read_header(fh)


def _read_header(fh) -> dict:
    first = fh.readline().decode().split()
    if len(first) != 2 or first[0] != MAGIC:
        raise ValueError("not a field file")
    if int(first[1]) != FORMAT_VERSION:
        raise ValueError(f"unsupported field format version {first[1]}")
    return json.loads(fh.readline().decode())


def read_field(path, closed: bool = True):
    """Return (label, field) with the field type recorded in the header."""
    with open(path, "rb") as fh:
        head = _read_header(fh)
        data = np.frombuffer(fh.read(), dtype=_DTYPE)
    grid = TensorGrid(
        tuple(build_disc_grid(int(r), int(a), float(g)) for r, a, g in head["factors"]),
        tuple(chart_from_dict(c) for c in head["charts"]),
    )
    size = int(np.prod(grid.shape))
    k = head["components"]
    if data.size != k * size:
        raise ValueError(f"expected {k * size} values, found {data.size}")
    arrays = [data[i * size:(i + 1) * size].reshape(grid.shape).astype(complex) for i in range(k)]
    if head["kind"] == "form":
        return head["label"], Form01Field(grid, arrays, closed=closed, check=False)
    return head["label"], ScalarField(grid, arrays[0])

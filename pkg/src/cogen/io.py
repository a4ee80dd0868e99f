"""Field exporters, the raw field container and CSV run logs.

Raw field files ("COGF1") hold a fixed 32-byte little-endian header followed
by the densities as ``<f8`` in the grid's linear index order (x fastest)::

    offset  size  content
    0       5     magic b"COGF1"
    5       1     dimension (u1)
    6       2     reserved (zero)
    8       6     dims, three u2 (unused axis is 1)
    14      4     spacing (f4)
    18      12    origin, three f4 (unused axis is 0)
    30      2     reserved (zero)

Spacing and origin are stored in single precision to fit the header. On
import they are either checked against a supplied grid or recovered as the
shortest decimal that rounds to the stored value.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DimensionError
from .geometry import DensityField, Grid

__all__ = [
    "export_field",
    "export_pgm",
    "export_vtk",
    "write_raw",
    "read_raw",
    "write_convergence_csv",
    "write_table_csv",
    "CONVERGENCE_COLUMNS",
]

FIELD_MAGIC = b"COGF1"
_FIELD_HEADER = struct.Struct("<5sBH3Hf3fH")
CONVERGENCE_COLUMNS = ("iter", "v1", "v2", "g21", "g12", "h", "delta")


def _padded(values, fill, d):
    return list(values) + [fill] * (3 - d)


def write_raw(field: DensityField, path) -> Path:
    grid = field.grid
    d = grid.dimension
    if max(grid.dims) > 0xFFFF:
        raise ConfigurationError("raw field files support at most 65535 cells per axis")
    header = _FIELD_HEADER.pack(FIELD_MAGIC, d, 0, *_padded(grid.dims, 1, d), grid.spacing,
                                *_padded(grid.origin, 0.0, d), 0)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    return path


def _shortest(x: float) -> float:
    return float(str(np.float32(x)))


def read_raw(path, grid: Grid | None = None) -> DensityField:
    """Read a raw field; when ``grid`` is given the header must describe it."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise ConfigurationError(f"{path}: no such field file") from None
    if len(data) < _FIELD_HEADER.size:
        raise ConfigurationError(f"{path}: truncated field file")
    magic, d, _, nx, ny, nz, spacing, ox, oy, oz, _ = _FIELD_HEADER.unpack_from(data)
    if magic != FIELD_MAGIC or d not in (2, 3):
        raise ConfigurationError(f"{path}: not a field file (bad magic or dimension)")
    dims = (nx, ny, nz)[:d]
    origin = (ox, oy, oz)[:d]
    n = int(np.prod(dims))
    if len(data) != _FIELD_HEADER.size + 8 * n:
        raise ConfigurationError(f"{path}: payload size does not match dims {dims}")
    values = np.frombuffer(data, dtype="<f8", offset=_FIELD_HEADER.size, count=n).astype(np.float64)
    if grid is None:
        grid = Grid(tuple(_shortest(v) for v in origin), _shortest(spacing), dims)
    else:
        if grid.dimension != d or tuple(grid.dims) != dims:
            raise DimensionError(f"{path}: field dims {dims} do not match grid dims {tuple(grid.dims)}")
        scale = max(grid.spacing, max(abs(v) for v in grid.origin))
        if (abs(np.float32(grid.spacing) - spacing) > 1e-6 * grid.spacing
                or any(abs(np.float32(a) - b) > 1e-6 * scale for a, b in zip(grid.origin, origin))):
            raise ConfigurationError(f"{path}: field spacing/origin do not match the grid")
    if np.any(values < 0) or np.any(values > 1) or not np.all(np.isfinite(values)):
        raise ConfigurationError(f"{path}: densities outside [0, 1]")
    return DensityField(grid, values)


def export_pgm(field: DensityField, path) -> Path:
    """Binary greyscale image, one pixel per cell, top row = largest y."""
    grid = field.grid
    if grid.dimension != 2:
        raise DimensionError("PGM export needs a 2D field")
    nx, ny = grid.dims
    pixels = np.rint(255.0 * field.as_array()).astype(np.uint8)[::-1]
    origin = " ".join(repr(float(v)) for v in grid.origin)
    header = f"P5\n# origin {origin} spacing {grid.spacing!r}\n{nx} {ny}\n255\n".encode("ascii")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())
    return path


def export_vtk(field: DensityField, path, name: str = "density") -> Path:
    """Legacy ASCII structured-points file with one cell scalar per grid cell."""
    grid = field.grid
    if grid.dimension != 3:
        raise DimensionError("VTK export needs a 3D field")
    dims = " ".join(str(v + 1) for v in grid.dims)
    origin = " ".join(repr(float(v)) for v in grid.origin)
    spacing = " ".join([repr(grid.spacing)] * 3)
    lines = [
        "# vtk DataFile Version 3.0",
        f"{name} field",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {dims}",
        f"ORIGIN {origin}",
        f"SPACING {spacing}",
        f"CELL_DATA {grid.n}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, field.values.reshape(-1, 1), fmt="%.17g")
    return path


_EXPORTERS = {"pgm": export_pgm, "vtk": export_vtk, "raw": write_raw}


def export_field(field: DensityField, fmt: str, path) -> Path:
    """Write ``field`` as ``pgm`` (2D), ``vtk`` (3D) or ``raw``."""
    try:
        exporter = _EXPORTERS[fmt.lower()]
    except KeyError:
        raise ConfigurationError(f"unknown export format {fmt!r}; expected one of {sorted(_EXPORTERS)}") from None
    return exporter(field, path)


def write_convergence_csv(history, path) -> Path:
    """One row per iteration under the header ``iter,v1,v2,g21,g12,h,delta``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONVERGENCE_COLUMNS)
        for rec in history:
            writer.writerow([rec.iter] + [repr(float(getattr(rec, c))) for c in CONVERGENCE_COLUMNS[1:]])
    return path


def write_table_csv(columns, rows, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path

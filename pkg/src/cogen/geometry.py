"""Uniform grids, density fields and analytic shape primitives.

Cells are indexed linearly with x fastest: ``index = x + nx * (y + ny * z)``.
Density values are material fractions in [0, 1]; multiply by ``spacing**d``
to get a measure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError

__all__ = [
    "Grid",
    "DensityField",
    "Shape",
    "Box",
    "Ball",
    "Cylinder",
    "Union",
    "Intersection",
    "Difference",
    "build_grid",
    "locate_cell",
    "rasterize",
    "measure",
    "threshold",
    "shape_from_dict",
    "shape_to_dict",
]


@dataclass(frozen=True)
class Grid:
    """Axis-aligned Cartesian lattice of ``prod(dims)`` square/cubic cells."""

    origin: tuple
    spacing: float
    dims: tuple

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        dims = tuple(int(v) for v in self.dims)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", float(self.spacing))
        if len(dims) not in (2, 3):
            raise ConfigurationError(f"grid dimension must be 2 or 3, got {len(dims)}")
        if len(origin) != len(dims):
            raise ConfigurationError("origin and dims have different lengths")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise ConfigurationError(f"spacing must be positive, got {self.spacing}")
        if min(dims) < 1:
            raise ConfigurationError(f"all dims must be >= 1, got {dims}")
        if int(np.prod(dims, dtype=object)) >= 2**31:
            raise ConfigurationError("grid too large for 32-bit cell indices")

    @property
    def dimension(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_measure(self) -> float:
        return self.spacing ** self.dimension

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=float) * self.spacing

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + self.extent

    @property
    def shape(self) -> tuple:
        """Array shape (reversed dims) for reshaping flat values, x last."""
        return tuple(reversed(self.dims))

    @property
    def domain_measure(self) -> float:
        return self.n * self.cell_measure

    def multi_index(self, index) -> np.ndarray:
        """Per-axis cell coordinates of linear indices, shape (..., d)."""
        index = np.asarray(index, dtype=np.int64)
        out = []
        for nd in self.dims:
            out.append(index % nd)
            index = index // nd
        return np.stack(out, axis=-1)

    def linear_index(self, multi) -> np.ndarray:
        multi = np.asarray(multi, dtype=np.int64)
        index = np.zeros(multi.shape[:-1], dtype=np.int64)
        for axis in reversed(range(self.dimension)):
            index = index * self.dims[axis] + multi[..., axis]
        return index

    def cell_center(self, index) -> np.ndarray:
        return np.asarray(self.origin) + (self.multi_index(index) + 0.5) * self.spacing

    def cell_centers(self) -> np.ndarray:
        """All cell centers in linear-index order, shape (n, d)."""
        return self.cell_center(np.arange(self.n))

    def locate(self, points) -> np.ndarray:
        """Vectorized cell lookup; returns -1 for points outside the grid.

        Cells are half-open, ``[lo, lo + spacing)`` along every axis.
        """
        points = np.asarray(points, dtype=float)
        rel = (points - np.asarray(self.origin)) / self.spacing
        with np.errstate(invalid="ignore"):
            ijk = np.floor(rel)
        dims = np.asarray(self.dims)
        inside = np.all((ijk >= 0) & (ijk < dims), axis=-1)
        ijk = np.where(inside[..., None], ijk, 0).astype(np.int64)
        index = self.linear_index(ijk)
        return np.where(inside, index, -1)

    def to_dict(self) -> dict:
        return {"origin": list(self.origin), "spacing": self.spacing, "dims": list(self.dims)}


def build_grid(origin: Sequence[float], spacing: float, dims: Sequence[int]) -> Grid:
    return Grid(tuple(origin), spacing, tuple(dims))


def locate_cell(grid: Grid, p) -> Optional[int]:
    """Index of the cell containing ``p``, or None outside the grid."""
    index = int(grid.locate(np.asarray(p, dtype=float)[None, :])[0])
    return None if index < 0 else index


@dataclass
class DensityField:
    """Per-cell material fractions over a grid; values are clamped to [0, 1]."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.grid.n:
            raise DimensionError(f"field has {values.size} values, grid has {self.grid.n} cells")
        if not np.all(np.isfinite(values)):
            raise DimensionError("density values must be finite")
        self.values = np.clip(values, 0.0, 1.0)

    @classmethod
    def zeros(cls, grid: Grid) -> "DensityField":
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def ones(cls, grid: Grid) -> "DensityField":
        return cls(grid, np.ones(grid.n))

    @classmethod
    def from_mask(cls, grid: Grid, mask) -> "DensityField":
        return cls(grid, np.asarray(mask, dtype=np.float64))

    def as_array(self) -> np.ndarray:
        """Values reshaped to ``grid.shape`` (z, y, x order)."""
        return self.values.reshape(self.grid.shape)

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.values.copy())


# --------------------------------------------------------------------------
# Shapes


class Shape:
    """Closed point set with an exact membership predicate."""

    def contains(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self) -> tuple:
        """Axis-aligned bounding box ``(lo, hi)``."""
        raise NotImplementedError

    def __or__(self, other):
        return Union(self, other)

    def __and__(self, other):
        return Intersection(self, other)

    def __sub__(self, other):
        return Difference(self, other)


@dataclass(frozen=True)
class Box(Shape):
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ConfigurationError("box corners have different dimensions")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ConfigurationError(f"degenerate box {lo} -> {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, points):
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.lo) & (points <= self.hi), axis=-1)

    def bounds(self):
        return np.asarray(self.lo), np.asarray(self.hi)


@dataclass(frozen=True)
class Ball(Shape):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0:
            raise ConfigurationError(f"ball radius must be positive, got {self.radius}")

    def contains(self, points):
        diff = np.asarray(points, dtype=float) - self.center
        return np.einsum("...i,...i->...", diff, diff) <= self.radius**2

    def bounds(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class Cylinder(Shape):
    """Solid cylinder around a finite axis segment (a rectangle in 2D)."""

    point: tuple
    direction: tuple
    radius: float
    half_length: float

    def __post_init__(self):
        point = tuple(float(v) for v in self.point)
        direction = np.asarray(self.direction, dtype=float)
        norm = np.linalg.norm(direction)
        if len(direction) != len(point) or norm == 0:
            raise ConfigurationError("cylinder direction must be a nonzero vector of matching dimension")
        if not (self.radius > 0 and self.half_length > 0):
            raise ConfigurationError("cylinder radius and half_length must be positive")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "direction", tuple(direction / norm))

    def contains(self, points):
        diff = np.asarray(points, dtype=float) - self.point
        axial = diff @ np.asarray(self.direction)
        radial = diff - axial[..., None] * np.asarray(self.direction)
        r2 = np.einsum("...i,...i->...", radial, radial)
        return (np.abs(axial) <= self.half_length) & (r2 <= self.radius**2)

    def bounds(self):
        c = np.asarray(self.point)
        a = np.asarray(self.direction)
        ext = np.abs(a) * self.half_length + self.radius * np.sqrt(np.clip(1 - a**2, 0, 1))
        return c - ext, c + ext


@dataclass(frozen=True)
class Union(Shape):
    a: Shape
    b: Shape

    def contains(self, points):
        return self.a.contains(points) | self.b.contains(points)

    def bounds(self):
        (la, ha), (lb, hb) = self.a.bounds(), self.b.bounds()
        return np.minimum(la, lb), np.maximum(ha, hb)


@dataclass(frozen=True)
class Intersection(Shape):
    a: Shape
    b: Shape

    def contains(self, points):
        return self.a.contains(points) & self.b.contains(points)

    def bounds(self):
        (la, ha), (lb, hb) = self.a.bounds(), self.b.bounds()
        return np.maximum(la, lb), np.minimum(ha, hb)


@dataclass(frozen=True)
class Difference(Shape):
    a: Shape
    b: Shape

    def contains(self, points):
        return self.a.contains(points) & ~self.b.contains(points)

    def bounds(self):
        return self.a.bounds()


_BOOLEAN = {"union": Union, "intersection": Intersection, "difference": Difference}


def shape_from_dict(spec: dict, path: str = "") -> Shape:
    """Build a shape tree from its JSON form.

    Leaves are ``{"box": {"min": .., "max": ..}}``, ``{"ball": {"center": ..,
    "radius": ..}}`` or ``{"cylinder": {"point", "direction", "radius",
    "half_length"}}``; internal nodes are ``{"union" | "intersection" |
    "difference": [a, b, ...]}`` (difference subtracts every later operand
    from the first).
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigurationError(f"{path or '/'}: shape must be an object with exactly one key")
    (kind, body), = spec.items()
    here = f"{path}/{kind}"
    try:
        if kind == "box":
            _check_keys(body, {"min", "max"}, here)
            return Box(tuple(body["min"]), tuple(body["max"]))
        if kind == "ball":
            _check_keys(body, {"center", "radius"}, here)
            return Ball(tuple(body["center"]), float(body["radius"]))
        if kind == "cylinder":
            _check_keys(body, {"point", "direction", "radius", "half_length"}, here)
            return Cylinder(tuple(body["point"]), tuple(body["direction"]),
                            float(body["radius"]), float(body["half_length"]))
    except (TypeError, KeyError) as exc:
        raise ConfigurationError(f"{here}: {exc}") from None
    except ConfigurationError as exc:
        if str(exc).startswith(here):
            raise
        raise ConfigurationError(f"{here}: {exc}") from None
    if kind in _BOOLEAN:
        if not isinstance(body, list) or len(body) < 2:
            raise ConfigurationError(f"{here}: needs a list of at least two operands")
        operands = [shape_from_dict(s, f"{here}/{i}") for i, s in enumerate(body)]
        result = operands[0]
        for other in operands[1:]:
            result = _BOOLEAN[kind](result, other)
        return result
    raise ConfigurationError(f"{here}: unknown shape kind {kind!r}")


def shape_to_dict(shape: Shape) -> dict:
    if isinstance(shape, Box):
        return {"box": {"min": list(shape.lo), "max": list(shape.hi)}}
    if isinstance(shape, Ball):
        return {"ball": {"center": list(shape.center), "radius": shape.radius}}
    if isinstance(shape, Cylinder):
        return {"cylinder": {"point": list(shape.point), "direction": list(shape.direction),
                             "radius": shape.radius, "half_length": shape.half_length}}
    for name, cls in _BOOLEAN.items():
        if isinstance(shape, cls):
            return {name: [shape_to_dict(shape.a), shape_to_dict(shape.b)]}
    raise TypeError(f"cannot serialize {type(shape).__name__}")


def _check_keys(body, required, path):
    if not isinstance(body, dict):
        raise ConfigurationError(f"{path}: expected an object")
    missing = required - set(body)
    extra = set(body) - required
    if missing:
        raise ConfigurationError(f"{path}/{sorted(missing)[0]}: missing field")
    if extra:
        raise ConfigurationError(f"{path}/{sorted(extra)[0]}: unknown field")


# --------------------------------------------------------------------------
# Rasterization and measures


def rasterize(shape: Shape, grid: Grid, supersample: int = 8, chunk: int = 1 << 20) -> DensityField:
    """Cell fractions of ``shape`` estimated from ``supersample**d`` stratified points per cell."""
    s = int(supersample)
    if s < 1:
        raise ConfigurationError("supersample must be >= 1")
    d = grid.dimension
    offsets = (np.stack(np.meshgrid(*[np.arange(s)] * d, indexing="ij"), -1).reshape(-1, d) + 0.5) / s
    offsets = (offsets - 0.5) * grid.spacing
    values = np.zeros(grid.n)

    # only cells overlapping the shape's bounding box need sampling
    lo, hi = shape.bounds()
    lo_idx = np.floor((np.asarray(lo) - grid.origin) / grid.spacing).astype(int)
    hi_idx = np.floor((np.asarray(hi) - grid.origin) / grid.spacing).astype(int)
    lo_idx = np.clip(lo_idx, 0, np.asarray(grid.dims) - 1)
    hi_idx = np.clip(hi_idx, 0, np.asarray(grid.dims) - 1)
    if np.any(np.asarray(hi) < grid.origin) or np.any(np.asarray(lo) > grid.upper):
        return DensityField(grid, values)
    axes = [np.arange(a, b + 1) for a, b in zip(lo_idx, hi_idx)]
    multi = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    cells = np.sort(grid.linear_index(multi))

    per_chunk = max(1, chunk // len(offsets))
    for start in range(0, len(cells), per_chunk):
        block = cells[start:start + per_chunk]
        centers = grid.cell_center(block)
        pts = centers[:, None, :] + offsets[None, :, :]
        inside = shape.contains(pts.reshape(-1, d)).reshape(len(block), -1)
        values[block] = inside.mean(axis=1)
    return DensityField(grid, values)


def measure(field: DensityField, mask=None) -> float:
    """Measure (area/volume) represented by the field, optionally over a cell mask."""
    values = field.values if mask is None else field.values[np.asarray(mask, dtype=bool)]
    return float(field.grid.cell_measure * values.sum())


def threshold(field: DensityField, theta: float = 0.5) -> np.ndarray:
    """Boolean occupancy ``rho > theta``."""
    if not 0 < theta < 1:
        raise ConfigurationError(f"threshold must lie in (0, 1), got {theta}")
    return field.values > theta

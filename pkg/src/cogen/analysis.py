"""Evaluation metrics and an independent quadrature check of the collision measure."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError, ValidationError
from .geometry import DensityField, Grid, Shape, threshold
from .motion import Trajectory

__all__ = [
    "DistanceSeries",
    "oracle_global_measure",
    "min_distance_series",
    "contact_fraction",
    "periodicity_score",
]


def oracle_global_measure(shape1: Shape, shape2: Shape, trajectory: Trajectory, samples_per_cell: int,
                          grid1: Grid, chunk: int = 1 << 20) -> float:
    """Time-averaged overlap measure by direct quadrature over body 1's domain.

    Stratified sample points of ``grid1`` are tested against ``shape1`` and,
    after mapping into body 2's frame with ``leg_21``, against ``shape2``.
    No correlation matrix is involved.
    """
    s = int(samples_per_cell)
    if s < 2:
        raise ConfigurationError("the quadrature oracle needs at least 2 samples per cell and axis")
    d = grid1.dimension
    offsets = (np.stack(np.meshgrid(*[np.arange(s)] * d, indexing="ij"), -1).reshape(-1, d) + 0.5) / s - 0.5
    offsets *= grid1.spacing
    total_points = grid1.n * len(offsets)
    hits = 0
    cells_per_chunk = max(1, chunk // len(offsets))
    for start in range(0, grid1.n, cells_per_chunk):
        centers = grid1.cell_center(np.arange(start, min(grid1.n, start + cells_per_chunk)))
        pts = (centers[:, None, :] + offsets[None]).reshape(-1, d)
        pts = pts[shape1.contains(pts)]
        if len(pts) == 0:
            continue
        for k in range(trajectory.K):
            hits += int(np.count_nonzero(shape2.contains(trajectory.leg_21.apply(k, pts))))
    return grid1.domain_measure * hits / (total_points * trajectory.K)


@dataclass
class DistanceSeries:
    """Per-timestep minimum distance between the two occupied cell-center sets."""

    values: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    spacing: float
    dimension: int

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def min(self) -> float:
        return float(self.values.min())

    def __len__(self):
        return len(self.values)


def min_distance_series(rho1: DensityField, rho2: DensityField, trajectory: Trajectory,
                        theta: float = 0.5) -> DistanceSeries:
    occ1 = threshold(rho1, theta)
    occ2 = threshold(rho2, theta)
    if not occ1.any() or not occ2.any():
        raise ValidationError("distance is undefined: a thresholded solid is empty")
    p1 = rho1.grid.cell_center(np.flatnonzero(occ1))
    p2 = rho2.grid.cell_center(np.flatnonzero(occ2))
    tree = cKDTree(p1)
    values = np.empty(trajectory.K)
    for k in range(trajectory.K):
        dist, _ = tree.query(trajectory.leg_12.apply(k, p2), k=1)
        values[k] = dist.min()
    return DistanceSeries(values, trajectory.times.copy(), rho1.grid.spacing, rho1.grid.dimension)


def contact_fraction(series: DistanceSeries, tolerance: float | None = None) -> float:
    """Fraction of timesteps whose minimum distance is within ``tolerance`` (default: one cell diagonal)."""
    if tolerance is None:
        tolerance = np.sqrt(series.dimension) * series.spacing
    if tolerance < 0:
        raise ConfigurationError("tolerance must be non-negative")
    # absorb rounding in distances that are exact multiples of the spacing
    slack = 1e-9 * max(tolerance, series.spacing)
    return float(np.mean(series.values <= tolerance + slack))


def periodicity_score(field: DensityField, axis: int, period_in_cells: int) -> float:
    """Pearson correlation between a field and its copy shifted along ``axis``.

    ``axis`` counts grid axes (0 = x, 1 = y, 2 = z).
    """
    p = int(period_in_cells)
    extent = field.grid.dims[axis]
    if p < 1 or p > extent // 2:
        raise ConfigurationError(f"shift {p} must lie in [1, {extent // 2}]")
    arr = np.moveaxis(field.as_array(), field.grid.dimension - 1 - axis, 0)
    a = arr[:-p].ravel()
    b = arr[p:].ravel()
    if a.std() == 0 or b.std() == 0:
        raise ValidationError("periodicity is undefined for a constant field")
    return float(np.corrcoef(a, b)[0, 1])

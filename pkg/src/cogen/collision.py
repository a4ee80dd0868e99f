"""Collision measures between two density fields under a relative motion.

Naming follows the frame in which a measure is integrated: ``g21`` is
integrated over body 1 (body 2 moving, matrix ``W12`` with body-1 rows) and
``g12`` over body 2 (matrix ``W21`` with body-2 rows). Both approximate the
time integral of the overlap measure of the two solids.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .correlation import CorrelationMatrix
from .errors import DimensionError
from .geometry import DensityField, Grid, threshold
from .motion import PoseSeries

__all__ = [
    "LocalMeasureField",
    "PartitionMasks",
    "Sensitivities",
    "global_measure",
    "local_field",
    "sensitivities",
    "partition",
    "sweep",
    "unsweep",
]


@dataclass
class LocalMeasureField:
    """Per-cell time fraction during which the other body overlaps the cell."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n,):
            raise DimensionError("local field size does not match grid")


@dataclass
class PartitionMasks:
    """Initially colliding (``hat``) and collision-free (``tilde``) cells of one body."""

    hat: np.ndarray
    tilde: np.ndarray


class Sensitivities(NamedTuple):
    dg21_drho1: np.ndarray
    dg21_drho2: np.ndarray
    dg12_drho1: np.ndarray
    dg12_drho2: np.ndarray


def _check(W: CorrelationMatrix, rho_stat: DensityField, rho_mov: DensityField):
    if W.shape != (rho_stat.grid.n, rho_mov.grid.n):
        raise DimensionError(f"matrix shape {W.shape} does not match fields "
                             f"({rho_stat.grid.n}, {rho_mov.grid.n})")


def global_measure(rho_stat: DensityField, rho_mov: DensityField, W: CorrelationMatrix) -> float:
    """``cell_measure * rho_stat^T W rho_mov``.

    Each moving cell center carries the measure of its own cell, so the
    cell measure is that of the moving grid (identical to the stationary one
    when both grids share a spacing).
    """
    _check(W, rho_stat, rho_mov)
    return float(rho_mov.grid.cell_measure * (rho_stat.values @ (W.matrix @ rho_mov.values)))


def local_field(rho_self: DensityField, rho_other: DensityField, W: CorrelationMatrix,
                masked: bool = True) -> LocalMeasureField:
    """Duration field ``W @ rho_other`` over ``rho_self``'s grid, optionally times ``rho_self``."""
    _check(W, rho_self, rho_other)
    f = W.matrix @ rho_other.values
    if masked:
        f = rho_self.values * f
    return LocalMeasureField(rho_self.grid, f)


def sensitivities(rho1: DensityField, rho2: DensityField, W12: CorrelationMatrix,
                  W21: CorrelationMatrix) -> Sensitivities:
    """Exact derivatives of both global measures with respect to every density."""
    _check(W12, rho1, rho2)
    _check(W21, rho2, rho1)
    m2 = rho2.grid.cell_measure
    m1 = rho1.grid.cell_measure
    return Sensitivities(
        dg21_drho1=m2 * (W12.matrix @ rho2.values),
        dg21_drho2=m2 * (W12.T @ rho1.values),
        dg12_drho1=m1 * (W21.T @ rho2.values),
        dg12_drho2=m1 * (W21.matrix @ rho1.values),
    )


def partition(rho: DensityField, f_masked, tol: float = 0.0) -> PartitionMasks:
    """Split the support of ``rho`` into colliding (``f > tol``) and free cells."""
    f = f_masked.values if isinstance(f_masked, LocalMeasureField) else np.asarray(f_masked)
    if f.shape != rho.values.shape:
        raise DimensionError("local field size does not match density field")
    support = rho.values > 0
    hat = support & (f > tol)
    return PartitionMasks(hat=hat, tilde=support & ~hat)


def _hits(shape: DensityField, leg: PoseSeries, target: Grid, theta: float) -> np.ndarray:
    occupied = threshold(shape, theta)
    centers = target.cell_centers()
    hit = np.zeros(target.n, dtype=bool)
    for k in range(len(leg)):
        idx = shape.grid.locate(leg.apply(k, centers))
        inside = idx >= 0
        hit[inside] |= occupied[idx[inside]]
    return hit


def sweep(shape: DensityField, leg: PoseSeries, target: Grid, theta: float = 0.5) -> DensityField:
    """Cells of ``target`` whose displaced center ever lands in occupied ``shape`` cells.

    ``leg[k]`` maps target points into the frame of ``shape``.
    """
    return DensityField.from_mask(target, _hits(shape, leg, target, theta))


def unsweep(obstacle: DensityField, leg: PoseSeries, target: Grid, theta: float = 0.5) -> DensityField:
    """Cells of ``target`` whose displaced center never lands in occupied ``obstacle`` cells.

    Points leaving the obstacle's grid count as free. This is the largest
    set on ``target`` that never collides with the obstacle.
    """
    return DensityField.from_mask(target, ~_hits(obstacle, leg, target, theta))

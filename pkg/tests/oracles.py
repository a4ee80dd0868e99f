"""Reference constructions shared by unit and acceptance tests.

Each oracle computes its answer by a route independent of the package's
correlation and lookup code.
"""
import numpy as np
from shapely import affinity, contains_xy
from shapely.geometry import box

from cogen.geometry import Ball, DensityField, build_grid, rasterize, threshold
from cogen.motion import Pose, PoseSeries, rotation_2d, rotation_about_point


def quarter_turn_leg(center):
    """Four samples of theta = 2 pi t - pi/4, i.e. exactly 0, 90, 180 and 270 degrees."""
    times = (np.arange(4) + 0.5) / 4
    return PoseSeries.from_poses([rotation_about_point(rotation_2d(2 * np.pi * t - np.pi / 4), center)
                                  for t in times])


def disk_case(cells=40):
    grid = build_grid((-1, -1), 2 / cells, (cells, cells))
    disk = threshold(rasterize(Ball((0, 0), 0.6), grid, 4))
    return grid, DensityField.from_mask(grid, disk), quarter_turn_leg((0.0, 0.0))


def square_rotation_case(cells=80, K=16, half=0.5):
    """Obstacle = domain minus a centered square; rotations sweep 0..45 degrees.

    Returns the grid, the obstacle field, the pose series, the oracle mask
    obtained by intersecting the rotated square polygons and sampling them at
    cell centers, and the mask of cells inside the square. Comparisons belong
    inside the square: corner cells outside it rotate off the grid, which
    counts as free.
    """
    grid = build_grid((-1, -1), 2 / cells, (cells, cells))
    square = box(-half, -half, half, half)
    centers = grid.cell_centers()
    inside = contains_xy(square, centers[:, 0], centers[:, 1])
    # cells whose center sits on the square edge are ambiguous; the grid avoids them
    obstacle = DensityField.from_mask(grid, ~inside)
    angles = (np.arange(K) + 0.5) / K * (np.pi / 4)
    leg = PoseSeries.from_poses([Pose(rotation_2d(a), [0.0, 0.0]) for a in angles])
    region = square
    for a in angles:
        # R x in square  <=>  x in square rotated by -a
        region = region.intersection(affinity.rotate(square, -a, origin=(0, 0), use_radians=True))
    oracle = contains_xy(region, centers[:, 0], centers[:, 1])
    return grid, obstacle, leg, oracle, inside

import numpy as np
import pytest

from cogen.errors import ConfigurationError
from cogen.geometry import (Ball, Box, Cylinder, DensityField, Difference, Grid, Intersection, Union, build_grid,
                            locate_cell, measure, rasterize, shape_from_dict, shape_to_dict, threshold)


def test_cell_centers_of_unit_grid():
    grid = build_grid((0, 0), 1.0, (2, 2))
    expected = np.array([[0.5, 0.5], [1.5, 0.5], [0.5, 1.5], [1.5, 1.5]])
    np.testing.assert_array_equal(grid.cell_centers(), expected)


def test_large_2d_grid_count_and_extent():
    grid = build_grid((0, 0), 0.01, (400, 400))
    assert grid.n == 160000
    np.testing.assert_allclose(grid.extent, [4.0, 4.0])


def test_3d_cam_grid_count():
    grid = build_grid((-1, -1, -1), 2 / 105, (105, 105, 105))
    assert grid.n == 1157625


@pytest.mark.parametrize("spacing, dims", [(0.0, (2, 2)), (-1.0, (2, 2)), (1.0, (0, 2)), (1.0, (2,))])
def test_invalid_grids_rejected(spacing, dims):
    with pytest.raises(ConfigurationError):
        build_grid((0,) * len(dims), spacing, dims)


def test_linear_index_runs_x_fastest():
    grid = build_grid((0, 0, 0), 1.0, (3, 4, 5))
    assert grid.linear_index(np.array([1, 2, 3])) == 1 + 3 * (2 + 4 * 3)
    np.testing.assert_array_equal(grid.multi_index(1 + 3 * (2 + 4 * 3)), [1, 2, 3])


class TestLocateCell:
    grid = build_grid((0, 0), 1.0, (2, 2))

    def test_center(self):
        assert locate_cell(self.grid, (0.5, 0.5)) == 0

    def test_half_open_boundary(self):
        # x = 1.0 belongs to the cell starting at 1.0
        assert locate_cell(self.grid, (1.0, 0.5)) == 1

    def test_outside(self):
        assert locate_cell(self.grid, (2.5, 0.5)) is None
        assert locate_cell(self.grid, (2.0, 0.5)) is None
        assert locate_cell(self.grid, (-1e-12, 0.5)) is None

    def test_vectorized_agrees(self):
        pts = np.array([[0.5, 0.5], [1.0, 0.5], [2.5, 0.5]])
        np.testing.assert_array_equal(self.grid.locate(pts), [0, 1, -1])


def test_density_values_are_clamped():
    grid = build_grid((0, 0), 1.0, (2, 1))
    field = DensityField(grid, [-0.5, 1.5])
    np.testing.assert_array_equal(field.values, [0.0, 1.0])


def test_density_field_size_mismatch():
    with pytest.raises(ValueError):
        DensityField(build_grid((0, 0), 1.0, (2, 2)), [1.0, 0.0])


class TestRasterize:
    def test_inscribed_disk(self):
        # pi r^2 / cell area, with r = 0.5 in a unit cell
        grid = build_grid((0, 0), 1.0, (3, 3))
        rho = rasterize(Ball((1.5, 1.5), 0.5), grid, 32)
        assert rho.values[4] == pytest.approx(np.pi / 4, abs=0.01)
        assert np.all(np.delete(rho.values, 4) == 0)

    def test_inscribed_disk_measure_converges(self):
        grid = build_grid((0, 0), 1.0, (3, 3))
        rho = rasterize(Ball((1.5, 1.5), 0.5), grid, 32)
        assert abs(measure(rho) - np.pi / 4) / (np.pi / 4) < 0.01

    def test_exact_box_coverage(self):
        grid = build_grid((0, 0), 1.0, (2, 2))
        rho = rasterize(Box((0, 0), (2, 1)), grid, 4)
        np.testing.assert_array_equal(rho.values, [1, 1, 0, 0])

    @pytest.mark.parametrize("s", [2, 4, 7, 8])
    def test_half_covered_cell(self, s):
        grid = build_grid((0, 0), 1.0, (1, 1))
        rho = rasterize(Box((0, 0), (0.5, 1)), grid, s)
        expected = np.ceil(s / 2) / s if s % 2 else 0.5
        # with odd s the middle sample column sits on the closed boundary
        assert rho.values[0] == pytest.approx(expected)
        if s % 2 == 0:
            assert rho.values[0] == 0.5

    def test_shape_outside_grid_is_empty(self):
        grid = build_grid((0, 0), 1.0, (4, 4))
        rho = rasterize(Ball((10, 10), 1), grid)
        assert not rho.values.any()

    def test_3d_box(self):
        grid = build_grid((0, 0, 0), 0.5, (4, 4, 4))
        rho = rasterize(Box((0, 0, 0), (1, 1, 2)), grid, 2)
        assert measure(rho) == pytest.approx(2.0)

    def test_invalid_supersample(self):
        with pytest.raises(ConfigurationError):
            rasterize(Ball((0, 0), 1), build_grid((0, 0), 1.0, (2, 2)), 0)


class TestMeasure:
    def test_full_domain(self):
        assert measure(DensityField.ones(build_grid((0, 0), 0.1, (10, 10)))) == pytest.approx(1.0)

    def test_zero(self):
        assert measure(DensityField.zeros(build_grid((0, 0), 0.1, (10, 10)))) == 0

    def test_fractions(self):
        assert measure(DensityField(build_grid((0, 0), 1.0, (2, 2)), [1, 1, 0, 0])) == 2.0

    def test_masked(self):
        field = DensityField(build_grid((0, 0), 1.0, (2, 2)), [1, 0.5, 0.25, 0])
        assert measure(field, [False, True, True, False]) == 0.75


class TestThreshold:
    def test_strict_inequality(self):
        field = DensityField(build_grid((0, 0), 1.0, (3, 1)), [0.2, 0.5, 0.7])
        np.testing.assert_array_equal(threshold(field, 0.5), [False, False, True])

    def test_all_ones(self):
        assert threshold(DensityField.ones(build_grid((0, 0), 1.0, (3, 3)))).all()

    def test_near_half(self):
        field = DensityField(build_grid((0, 0), 1.0, (2, 1)), [0.49, 0.51])
        np.testing.assert_array_equal(threshold(field), [False, True])

    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.1])
    def test_theta_range(self, theta):
        with pytest.raises(ConfigurationError):
            threshold(DensityField.ones(build_grid((0, 0), 1.0, (1, 1))), theta)


class TestShapes:
    def test_closed_boundaries(self):
        assert Box((0, 0), (1, 1)).contains(np.array([[1.0, 1.0]]))[0]
        assert Ball((0, 0), 1).contains(np.array([[1.0, 0.0]]))[0]

    def test_cylinder(self):
        cyl = Cylinder((0, 0, 0), (0, 0, 2), 1.0, 0.5)
        pts = np.array([[0.9, 0, 0.4], [0.9, 0, 0.6], [1.1, 0, 0], [0, 0, -0.5]])
        np.testing.assert_array_equal(cyl.contains(pts), [True, False, False, True])

    def test_booleans(self):
        a, b = Box((0, 0), (2, 2)), Box((1, 1), (3, 3))
        pts = np.array([[0.5, 0.5], [1.5, 1.5], [2.5, 2.5], [5, 5]])
        np.testing.assert_array_equal((a | b).contains(pts), [True, True, True, False])
        np.testing.assert_array_equal((a & b).contains(pts), [False, True, False, False])
        np.testing.assert_array_equal((a - b).contains(pts), [True, False, False, False])
        assert isinstance(a | b, Union) and isinstance(a & b, Intersection) and isinstance(a - b, Difference)

    @pytest.mark.parametrize("bad", [lambda: Box((0, 0), (0, 1)), lambda: Ball((0, 0), 0),
                                     lambda: Cylinder((0, 0, 0), (0, 0, 0), 1, 1)])
    def test_degenerate_primitives(self, bad):
        with pytest.raises(ConfigurationError):
            bad()

    def test_dict_round_trip(self):
        spec = {"difference": [{"box": {"min": [-1, -1, 0], "max": [1, 1, 2]}},
                               {"ball": {"center": [0, 0, 0], "radius": 0.5}},
                               {"cylinder": {"point": [0, 0, 1], "direction": [0, 0, 1],
                                             "radius": 0.2, "half_length": 1}}]}
        shape = shape_from_dict(spec)
        again = shape_from_dict(shape_to_dict(shape))
        pts = np.random.default_rng(0).uniform(-1.5, 2.5, size=(500, 3))
        np.testing.assert_array_equal(shape.contains(pts), again.contains(pts))

    @pytest.mark.parametrize("spec, where", [
        ({"box": {"min": [0, 0]}}, "/box/max"),
        ({"union": [{"box": {"min": [0, 0], "max": [1, 1]}}, {"blob": {}}]}, "/union/1/blob"),
        ({"ball": {"center": [0, 0], "radius": 1, "colour": 3}}, "/ball/colour"),
    ])
    def test_dict_errors_name_the_path(self, spec, where):
        with pytest.raises(ConfigurationError, match=where):
            shape_from_dict(spec)


def test_grid_is_hashable_and_frozen():
    grid = Grid((0, 0), 1.0, (2, 2))
    assert grid == build_grid((0.0, 0.0), 1, [2, 2])
    with pytest.raises(AttributeError):
        grid.spacing = 2.0

import numpy as np
import pytest

from cogen.analysis import (DistanceSeries, contact_fraction, min_distance_series, oracle_global_measure,
                            periodicity_score)
from cogen.collision import global_measure
from cogen.correlation import assemble
from cogen.errors import ConfigurationError, ValidationError
from cogen.geometry import Box, DensityField, build_grid
from cogen.motion import Pose, builtin_motion, sample_relative_motion
from cogen.scene import load_builtin_scene


def still(K=3, d=2):
    return sample_relative_motion(lambda t: Pose.identity(d), lambda t: Pose.identity(d), K)


class TestOracle:
    def test_disjoint(self):
        grid = build_grid((0, 0), 0.5, (8, 4))
        assert oracle_global_measure(Box((0, 0), (1, 1)), Box((2, 0), (3, 1)), still(), 4, grid) == 0

    def test_coincident_unit_boxes(self):
        grid = build_grid((0, 0), 0.25, (8, 8))
        box = Box((0, 0), (1, 1))
        assert oracle_global_measure(box, box, still(), 4, grid) == pytest.approx(1.0)

    def test_too_few_samples(self):
        with pytest.raises(ConfigurationError):
            oracle_global_measure(Box((0, 0), (1, 1)), Box((0, 0), (1, 1)), still(), 1, build_grid((0, 0), 1, (1, 1)))

    def test_agrees_with_matrix_on_coarse_squares(self):
        scene = load_builtin_scene("squares2d").rescaled(8, K=40)
        traj = scene.trajectory()
        r1, r2 = scene.initial_fields()
        g = global_measure(r1, r2, assemble(scene.grid1, scene.grid2, traj.leg_12))
        ref = oracle_global_measure(scene.shape1, scene.shape2, traj, 8, scene.grid1)
        assert abs(g - ref) <= 0.05 * ref
        # refinement of the quadrature changes little
        finer = oracle_global_measure(scene.shape1, scene.shape2, traj, 16, scene.grid1)
        assert abs(finer - ref) <= 0.02 * ref


class TestDistance:
    grid = build_grid((0, 0), 1.0, (2, 1))

    def test_coincident(self):
        one = DensityField(self.grid, [1, 0])
        series = min_distance_series(one, one, still())
        np.testing.assert_array_equal(series.values, 0.0)
        assert len(series) == 3

    def test_unit_apart(self):
        series = min_distance_series(DensityField(self.grid, [1, 0]), DensityField(self.grid, [0, 1]), still())
        np.testing.assert_allclose(series.values, 1.0)
        assert series.mean >= series.min

    def test_empty_solid(self):
        with pytest.raises(ValidationError):
            min_distance_series(DensityField(self.grid, [1, 0]), DensityField(self.grid, [0.5, 0.2]), still())

    def test_swap_symmetry(self):
        grid1 = build_grid((-1, -1), 0.1, (20, 20))
        grid2 = build_grid((-0.4, -1), 0.1, (16, 20))
        m1, m2 = builtin_motion("counter_rotation", {"center2": [0.9, 0.0]})
        traj = sample_relative_motion(m1, m2, 17)
        rng = np.random.default_rng(4)
        r1 = DensityField(grid1, rng.random(grid1.n) > 0.8)
        r2 = DensityField(grid2, rng.random(grid2.n) > 0.8)
        a = min_distance_series(r1, r2, traj)
        b = min_distance_series(r2, r1, traj.swapped())
        np.testing.assert_allclose(a.values, b.values, atol=1e-9)


class TestContactFraction:
    def series(self, values, spacing=1.0):
        values = np.asarray(values, float)
        return DistanceSeries(values, np.arange(len(values)), spacing, 2)

    def test_always_touching(self):
        assert contact_fraction(self.series([0, 0, 0])) == 1.0

    def test_far_apart(self):
        assert contact_fraction(self.series([10, 10]), np.sqrt(2)) == 0.0

    def test_default_is_cell_diagonal(self):
        assert contact_fraction(self.series([np.sqrt(2), 1.5])) == 0.5

    def test_negative_tolerance(self):
        with pytest.raises(ConfigurationError):
            contact_fraction(self.series([0]), -1)

    def test_monotone_in_tolerance(self):
        s = self.series(np.random.default_rng(0).random(50) * 3)
        fr = [contact_fraction(s, t) for t in np.linspace(0, 3, 31)]
        assert all(a <= b for a, b in zip(fr, fr[1:]))


class TestPeriodicity:
    grid = build_grid((0, 0, 0), 1.0, (3, 3, 16))

    def test_constant_along_axis(self):
        # values vary across x and y only
        arr = np.broadcast_to(np.random.default_rng(0).random((1, 3, 3)), (16, 3, 3))
        field = DensityField(self.grid, arr.ravel())
        for p in (1, 3, 8):
            assert periodicity_score(field, 2, p) == pytest.approx(1.0)

    def test_square_wave(self):
        p = 4
        z = np.arange(16)
        slabs = ((z // (p // 2)) % 2).astype(float)
        field = DensityField(self.grid, np.broadcast_to(slabs[:, None, None], (16, 3, 3)).ravel())
        assert periodicity_score(field, 2, p // 2) == pytest.approx(-1.0)
        assert periodicity_score(field, 2, p) == pytest.approx(1.0)

    def test_axis_selection(self):
        # a wave along x is invisible to shifts along z
        x = np.arange(3)
        field = DensityField(self.grid, np.broadcast_to((x % 2)[None, None, :], (16, 3, 3)).ravel().astype(float))
        assert periodicity_score(field, 2, 5) == pytest.approx(1.0)

    def test_constant_field_rejected(self):
        with pytest.raises(ValidationError):
            periodicity_score(DensityField.ones(self.grid), 2, 2)

    @pytest.mark.parametrize("p", [0, 9])
    def test_shift_range(self, p):
        with pytest.raises(ConfigurationError):
            periodicity_score(DensityField.ones(self.grid), 2, p)

"""Randomized checks of the structural invariants of every module."""
import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cogen.analysis import DistanceSeries, contact_fraction, min_distance_series
from cogen.collision import global_measure, local_field, partition, sensitivities, unsweep
from cogen.correlation import CorrelationMatrix, assemble, matvec, restrict
from cogen.geometry import Box, DensityField, build_grid, measure, rasterize, threshold
from cogen.io import read_raw, write_raw
from cogen.motion import Pose, builtin_motion, cam_rotation_3d, sample_relative_motion
from cogen.optimizer import HatProblem, lagrangian_and_gradient, update_step
from cogen.scene import parse_scene, squares_scene

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])

coords = st.floats(-2, 2, allow_nan=False)
unit = st.floats(0, 1, allow_nan=False)


@st.composite
def grids(draw, d=2, max_cells=12):
    origin = tuple(draw(coords) for _ in range(d))
    spacing = draw(st.floats(0.05, 1.0))
    dims = tuple(draw(st.integers(1, max_cells)) for _ in range(d))
    return build_grid(origin, spacing, dims)


@st.composite
def fields(draw, grid):
    return DensityField(grid, draw(arrays(np.float64, grid.n, elements=unit)))


@st.composite
def translation_pair(draw):
    grid = draw(grids())
    v = np.array([draw(st.floats(-1, 1)), draw(st.floats(-1, 1))])
    return grid, v, draw(st.integers(1, 30))


def translating(v, K):
    return sample_relative_motion(lambda t: Pose.identity(2), lambda t: Pose.from_translation(v * t), K)


@st.composite
def rotation_pair(draw):
    g1 = draw(grids(max_cells=10))
    g2 = draw(grids(max_cells=10))
    c1 = [draw(coords), draw(coords)]
    c2 = [draw(coords), draw(coords)]
    K = draw(st.integers(1, 25))
    m1, m2 = builtin_motion("counter_rotation", {"center1": c1, "center2": c2})
    return g1, g2, sample_relative_motion(m1, m2, K)


# geometry -------------------------------------------------------------------

@FAST
@given(grids(d=3, max_cells=6))
def test_locate_cell_inverts_cell_centers(grid):
    np.testing.assert_array_equal(grid.locate(grid.cell_centers()), np.arange(grid.n))


@FAST
@given(grids(), st.lists(coords, min_size=4, max_size=4), st.floats(0, 1), st.floats(0, 1))
def test_rasterize_monotone_under_box_inclusion(grid, corners, grow_lo, grow_hi):
    lo = np.minimum(corners[:2], corners[2:])
    hi = np.maximum(corners[:2], corners[2:]) + 0.01
    inner = rasterize(Box(lo, hi), grid, 4)
    outer = rasterize(Box(lo - grow_lo, hi + grow_hi), grid, 4)
    assert np.all(inner.values <= outer.values)


@FAST
@given(st.data())
def test_threshold_measure_is_popcount(data):
    grid = data.draw(grids())
    field = data.draw(fields(grid))
    theta = data.draw(st.floats(0.01, 0.99))
    mask = threshold(field, theta)
    assert measure(DensityField.from_mask(grid, mask)) == pytest.approx(grid.cell_measure * mask.sum())


@FAST
@given(st.data())
def test_densities_stay_in_unit_interval(data):
    grid = data.draw(grids())
    values = data.draw(arrays(np.float64, grid.n, elements=st.floats(-5, 5)))
    field = DensityField(grid, values)
    assert field.values.min() >= 0 and field.values.max() <= 1


# motion ---------------------------------------------------------------------

@FAST
@given(st.floats(-10, 10), st.floats(-10, 10), st.lists(coords, min_size=3, max_size=3), st.integers(1, 20))
def test_legs_invert_each_other(a, b, shift, K):
    m1 = lambda t: Pose(cam_rotation_3d(a * t), np.array(shift) * t)  # noqa: E731
    m2 = lambda t: Pose(cam_rotation_3d(b * t).T, [t, 0, -t])  # noqa: E731
    traj = sample_relative_motion(m1, m2, K)
    x = np.random.default_rng(K).normal(size=(5, 3))
    for k in range(K):
        np.testing.assert_allclose(traj.leg_12.apply(k, traj.leg_21.apply(k, x)), x, atol=1e-9)


@FAST
@given(coords, coords, coords, coords)
def test_counter_rotation_returns_home(a, b, c, d):
    for m in builtin_motion("counter_rotation", {"center1": [a, b], "center2": [c, d]}):
        np.testing.assert_allclose(m(1.0).matrix(), np.eye(3), atol=1e-9)


@FAST
@given(st.floats(0.1, 5), st.floats(0.01, 0.99))
def test_screw_ratio_is_constant(L, t):
    bolt, _ = builtin_motion("screw", {"L": L})
    phi = 2 * np.pi * 4 * t
    assert bolt(t).translation[2] / phi == pytest.approx(-L / (10 * np.pi))


# correlation ----------------------------------------------------------------

@FAST
@given(rotation_pair())
def test_column_sums_bounded(pair):
    g1, g2, traj = pair
    W = assemble(g1, g2, traj.leg_12)
    assert np.all(W.column_sums() <= 1 + 1e-12)


@FAST
@given(translation_pair())
def test_doubling_timesteps_moves_entries_by_at_most_delta(pair):
    # along a straight path each moving center visits a cell at most once
    grid, v, K = pair
    coarse = assemble(grid, grid, translating(v, K).leg_12).matrix
    fine = assemble(grid, grid, translating(v, 2 * K).leg_12).matrix
    assert abs(coarse - fine).max() <= 1.0 / K + 1e-12


def test_doubling_timesteps_per_visit_bound():
    # the relative motion of the counter-rotating pair turns twice, so each
    # stationary cell can be visited by a moving center twice
    g = build_grid((-1, -1), 0.05, (40, 40))
    m1, m2 = builtin_motion("counter_rotation", {"center2": [0.5, 0.0]})
    for K in (10, 37):
        a = assemble(g, g, sample_relative_motion(m1, m2, K).leg_12).matrix
        b = assemble(g, g, sample_relative_motion(m1, m2, 2 * K).leg_12).matrix
        assert abs(a - b).max() <= 2.0 / K + 1e-12


@FAST
@given(st.data())
def test_restrict_then_matvec_is_masked_matvec(data):
    n1, n2 = data.draw(st.integers(1, 15)), data.draw(st.integers(1, 15))
    dense = data.draw(arrays(np.float64, (n1, n2), elements=unit))
    W = CorrelationMatrix(sp.csr_matrix(dense), K=1)
    rows = data.draw(arrays(bool, n1))
    cols = data.draw(arrays(bool, n2))
    v = data.draw(arrays(np.float64, n2, elements=unit))
    np.testing.assert_allclose(matvec(restrict(W, rows, cols), v), rows * (dense @ (cols * v)), atol=1e-12)
    full = restrict(W, np.ones(n1, bool), np.ones(n2, bool))
    assert (full.matrix != W.matrix).nnz == 0


# collision ------------------------------------------------------------------

@FAST
@given(st.data())
def test_measures_are_consistent(data):
    g1, g2, traj = data.draw(rotation_pair())
    r1, r2 = data.draw(fields(g1)), data.draw(fields(g2))
    W12 = assemble(g1, g2, traj.leg_12)
    W21 = assemble(g2, g1, traj.leg_21)
    g = global_measure(r1, r2, W12)
    f = local_field(r1, r2, W12, masked=True)
    assert g == pytest.approx(g2.cell_measure * f.values.sum(), rel=1e-12, abs=1e-15)
    assert np.all(f.values >= 0) and np.all(f.values[r1.values == 0] == 0)
    masks = partition(r1, f)
    assert not (masks.hat & masks.tilde).any()
    np.testing.assert_array_equal(masks.hat | masks.tilde, r1.values > 0)
    assert (g == 0) == (not masks.hat.any())
    s = sensitivities(r1, r2, W12, W21)
    assert float(r1.values @ s.dg21_drho1) == pytest.approx(g, rel=1e-12, abs=1e-15)
    assert float(r2.values @ s.dg21_drho2) == pytest.approx(g, rel=1e-12, abs=1e-15)


@FAST
@given(st.data())
def test_unswept_field_never_collides(data):
    g1, g2, traj = data.draw(rotation_pair())
    obstacle = DensityField.from_mask(g1, threshold(data.draw(fields(g1))))
    free = unsweep(obstacle, traj.leg_12, g2)
    assert global_measure(obstacle, free, assemble(g1, g2, traj.leg_12)) == 0.0


# optimizer ------------------------------------------------------------------

@FAST
@given(st.data())
def test_update_step_respects_box_and_move_limit(data):
    n1, n2 = data.draw(st.integers(1, 8)), data.draw(st.integers(1, 8))
    A12 = sp.csr_matrix(data.draw(arrays(np.float64, (n1, n2), elements=unit)))
    A21 = sp.csr_matrix(data.draw(arrays(np.float64, (n2, n1), elements=unit)))
    problem = HatProblem(A12, A21, 0.1, 0.1, data.draw(unit))
    x1 = data.draw(arrays(np.float64, n1, elements=unit))
    x2 = data.draw(arrays(np.float64, n2, elements=unit))
    lam = tuple(data.draw(st.floats(-5, 5)) for _ in range(3))
    c = data.draw(st.floats(0, 100))
    m = data.draw(st.floats(0.01, 1))
    phi, g1, g2, _ = lagrangian_and_gradient(problem, x1, x2, lam, c)
    y1, y2, phi_new, _, _ = update_step(problem, x1, x2, g1, g2, phi, lam, c, data.draw(st.floats(0.01, 50)), m)
    for x, y in ((x1, y1), (x2, y2)):
        assert np.all((y >= 0) & (y <= 1))
        assert np.all(np.abs(y - x) <= m + 1e-12)
    assert phi_new <= phi


# analysis -------------------------------------------------------------------

@FAST
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 5)), st.floats(0, 5), st.floats(0, 5))
def test_contact_fraction_monotone(values, a, b):
    series = DistanceSeries(values, np.arange(len(values)), 0.5, 2)
    lo, hi = sorted((a, b))
    assert contact_fraction(series, lo) <= contact_fraction(series, hi)


@FAST
@given(st.data())
def test_distance_series_swap_symmetric(data):
    g1, g2, traj = data.draw(rotation_pair())
    m1 = data.draw(arrays(bool, g1.n))
    m2 = data.draw(arrays(bool, g2.n))
    if not m1.any() or not m2.any():
        return
    r1, r2 = DensityField.from_mask(g1, m1), DensityField.from_mask(g2, m2)
    a = min_distance_series(r1, r2, traj)
    b = min_distance_series(r2, r1, traj.swapped())
    np.testing.assert_allclose(a.values, b.values, atol=1e-9)
    assert np.all(a.values >= 0) and a.mean >= a.min


# cli-io ---------------------------------------------------------------------

@FAST
@given(st.data())
def test_raw_round_trip_is_bit_exact(tmp_path, data):
    grid = data.draw(grids(d=data.draw(st.sampled_from([2, 3])), max_cells=6))
    field = data.draw(fields(grid))
    path = write_raw(field, tmp_path / "f.bin")
    back = read_raw(path, grid)
    assert back.values.tobytes() == field.values.tobytes()
    assert read_raw(path).grid.dims == grid.dims


@FAST
@given(st.integers(2, 50), st.integers(1, 100), st.floats(0.5, 3), st.floats(0.1, 2))
def test_scene_file_round_trip(tmp_path, cells, K, side, spacing):
    raw = squares_scene(cells=cells, K=K, side=side, center_spacing=spacing)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(raw))
    scene = parse_scene(path)
    path.write_text(json.dumps(scene.to_dict()))
    again = parse_scene(path)
    assert again.to_dict() == raw
    assert again.grid1 == scene.grid1 and again.K == K and again.gammas == scene.gammas

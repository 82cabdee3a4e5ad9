"""Grid construction, discrete calculus, and level-set geometry."""
import numpy as np
import pytest

from pxlap import (
    BallContainmentError,
    ConfigError,
    FieldMismatchError,
    Grid,
    ScalarField,
    gradient,
    integrate,
    l2_distance,
    level_set_measure,
    make_grid,
    read_field_csv,
    write_field_csv,
)


def test_make_grid_geometry():
    g = make_grid([[0.0, 1.0], [-1.0, 3.0]], [9, 17])
    assert g.dim == 2
    assert g.shape == (9, 17)
    assert g.spacing == (pytest.approx(0.125), pytest.approx(0.25))
    assert g.cell_volume == pytest.approx(0.125 * 0.25)
    assert g.volume == pytest.approx(4.0)
    assert g.center == (pytest.approx(0.5), pytest.approx(1.0))
    # boundary mask: outermost layer only
    interior = g.boundary_mask[1:-1, 1:-1]
    assert not interior.any()
    assert g.boundary_mask[0, :].all()
    assert g.boundary_mask[:, -1].all()
    assert int(g.boundary_mask.sum()) == 9 * 17 - 7 * 15


def test_make_grid_rejects_bad_requests():
    with pytest.raises(ConfigError):
        make_grid([[0, 1]] * 4, 9)
    with pytest.raises(ConfigError):
        make_grid([[1.0, 1.0]], 9)
    with pytest.raises(ConfigError):
        make_grid([[0.0, 1.0]], 7)
    with pytest.raises(ConfigError):
        make_grid([[0.0, 1.0], [0.0, 1.0]], [9, 9, 9])


def test_gradient_of_constant_vanishes(unit_grid_2d):
    u = ScalarField(np.full(unit_grid_2d.shape, 4.25), unit_grid_2d)
    assert np.all(gradient(u) == 0.0)


def test_gradient_exact_for_linear():
    g = make_grid([[0.0, 1.0]], 33)
    u = ScalarField.from_function(g, lambda x: x)
    grad = gradient(u)[..., 0]
    assert np.allclose(grad[1:-1], 1.0, rtol=0, atol=1e-13)


def test_gradient_exact_for_quadratic_interior():
    g = make_grid([[0.0, 1.0]], 65)
    u = ScalarField.from_function(g, lambda x: x * x)
    grad = gradient(u)[..., 0]
    expected = 2.0 * g.axes[0]
    # central difference has no truncation error on quadratics, only rounding
    assert np.allclose(grad[1:-1], expected[1:-1], rtol=0, atol=1e-12)


def test_gradient_too_coarse_message():
    # make_grid refuses tiny grids, so assemble one by hand to hit the guard
    axis = np.linspace(0.0, 1.0, 2)
    tiny = Grid(
        extents=((0.0, 1.0),),
        nodes=(2,),
        spacing=(1.0,),
        axes=(axis,),
        boundary_mask=np.ones(2, dtype=bool),
        quad_weights=np.full(2, 0.5),
        cell_volume=1.0,
    )
    with pytest.raises(ConfigError, match="grid too coarse"):
        gradient(ScalarField(np.zeros(2), tiny))


def test_integrate_constants():
    g1 = make_grid([[0.0, 1.0]], 41)
    assert integrate(np.ones(g1.shape), g1) == pytest.approx(1.0, abs=1e-13)
    g2 = make_grid([[0.0, 1.0], [0.0, 1.0]], 12)
    assert integrate(np.ones(g2.shape), g2) == pytest.approx(1.0, abs=1e-13)


def test_integrate_linear_exact():
    g = make_grid([[0.0, 1.0]], 33)
    u = ScalarField.from_function(g, lambda x: x)
    assert abs(integrate(u) - 0.5) <= 1e-12


def test_integrate_is_linear_and_monotone(unit_grid_2d, rng):
    a = rng.standard_normal(unit_grid_2d.shape)
    b = rng.standard_normal(unit_grid_2d.shape)
    lin = integrate(2.0 * a - 3.0 * b, unit_grid_2d)
    assert lin == pytest.approx(2 * integrate(a, unit_grid_2d) - 3 * integrate(b, unit_grid_2d))
    assert integrate(np.abs(a), unit_grid_2d) >= 0.0


def test_integrate_shape_mismatch(unit_grid_2d):
    with pytest.raises(FieldMismatchError):
        integrate(np.ones((3, 3)), unit_grid_2d)
    with pytest.raises(ConfigError):
        integrate(np.ones((3, 3)))


def test_level_set_empty(unit_grid_2d):
    u = ScalarField.zeros(unit_grid_2d)
    m = level_set_measure(u, 1.0, 0.25, unit_grid_2d.center)
    assert m.measure == 0.0
    assert m.count == 0
    assert m.node_indices.size == 0


def test_level_set_full_domain():
    g = make_grid([[0.0, 1.0], [0.0, 1.0]], 20)
    u = ScalarField(np.full(g.shape, 3.0), g)
    m = level_set_measure(u, 1.0, 5.0, g.center, strict=False)
    # every node counts, so the quantized measure overshoots |domain| by at
    # most one cell layer: n*h = 1 + h per axis
    h = g.spacing[0]
    assert m.count == 20 * 20
    assert abs(m.measure - g.volume) <= (1 + h) ** 2 - 1 + 1e-12


def test_level_set_1d_ramp_brute_force():
    g = make_grid([[0.0, 1.0]], 513)
    u = ScalarField.from_function(g, lambda x: x)
    m = level_set_measure(u, 0.5, 0.4, (0.5,))
    # independent enumeration of qualifying nodes
    xs = g.axes[0]
    keep = [i for i, x in enumerate(xs) if abs(x - 0.5) < 0.4 and x > 0.5]
    assert m.count == len(keep)
    assert np.array_equal(m.node_indices, np.array(keep))
    assert m.measure == pytest.approx(len(keep) * g.cell_volume)
    assert abs(m.measure - 0.4) <= 2 * g.spacing[0]


def test_level_set_monotone_in_level_and_radius(unit_grid_2d, rng):
    u = ScalarField(rng.standard_normal(unit_grid_2d.shape), unit_grid_2d)
    center = unit_grid_2d.center
    levels = np.sort(rng.uniform(-2.0, 2.0, 6))
    measures = [level_set_measure(u, l, 0.3, center).measure for l in levels]
    assert all(a >= b for a, b in zip(measures, measures[1:]))
    radii = np.sort(rng.uniform(0.05, 0.45, 6))
    measures_r = [level_set_measure(u, 0.0, s, center).measure for s in radii]
    assert all(a <= b for a, b in zip(measures_r, measures_r[1:]))


def test_level_set_strict_containment(unit_grid_2d):
    u = ScalarField.zeros(unit_grid_2d)
    with pytest.raises(BallContainmentError, match="ball containment error"):
        level_set_measure(u, 0.0, 0.4, (0.2, 0.5))
    # same ball is accepted when strictness is waived
    level_set_measure(u, 0.0, 0.4, (0.2, 0.5), strict=False)
    with pytest.raises(ConfigError):
        level_set_measure(u, 0.0, -0.1, (0.5, 0.5))
    with pytest.raises(ConfigError):
        level_set_measure(u, 0.0, 0.1, (0.5,))


def test_l2_distance_matches_quadrature(unit_grid_2d, rng):
    u = ScalarField(rng.standard_normal(unit_grid_2d.shape), unit_grid_2d)
    v = ScalarField(rng.standard_normal(unit_grid_2d.shape), unit_grid_2d)
    direct = np.sqrt(integrate((u.values - v.values) ** 2, unit_grid_2d))
    assert l2_distance(u, v) == pytest.approx(direct, rel=1e-14)
    assert l2_distance(u, u) == 0.0


def test_field_csv_round_trip(tmp_path, unit_grid_2d, rng):
    u = ScalarField(rng.standard_normal(unit_grid_2d.shape), unit_grid_2d)
    path = tmp_path / "field.csv"
    write_field_csv(u, path)
    header = path.read_text().splitlines()[0]
    assert header == "x1,x2,value"
    back = read_field_csv(path, unit_grid_2d)
    assert np.array_equal(back.values, u.values)
    wrong = make_grid([[0.0, 1.0], [0.0, 1.0]], 9)
    with pytest.raises(FieldMismatchError):
        read_field_csv(path, wrong)


def test_field_csv_detects_foreign_coordinates(tmp_path, unit_grid_2d, rng):
    u = ScalarField(rng.standard_normal(unit_grid_2d.shape), unit_grid_2d)
    path = tmp_path / "field.csv"
    write_field_csv(u, path)
    shifted = make_grid([[0.1, 1.1], [0.0, 1.0]], unit_grid_2d.nodes[0])
    with pytest.raises(FieldMismatchError):
        read_field_csv(path, shifted)


def test_scalar_field_guards(unit_grid_2d):
    with pytest.raises(FieldMismatchError):
        ScalarField(np.zeros((4, 4)), unit_grid_2d)
    bad = np.zeros(unit_grid_2d.shape)
    bad[2, 2] = np.inf
    with pytest.raises(FieldMismatchError):
        ScalarField(bad, unit_grid_2d)
    u = ScalarField(np.ones(unit_grid_2d.shape), unit_grid_2d).zero_boundary()
    assert np.all(u.values[unit_grid_2d.boundary_mask] == 0.0)
    assert np.all(u.values[unit_grid_2d.interior_mask] == 1.0)

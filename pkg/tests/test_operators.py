import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from infheat.domain import (Field, build_disk_grid, build_interval_grid,
                            build_rectangle_grid)
from infheat.operators import (SchemeSpec, consistency_order, inf_laplacian,
                               max_slope, residual_table)


def interval(n=201):
    return build_interval_grid(-1, 1, n)


def full_stencil_nodes(grid):
    """Interior nodes whose whole stencil is present."""
    full = np.all(grid.neighbors >= 0, axis=1)
    return grid.interior[full]


def test_scheme_spec_validation():
    assert SchemeSpec().gradient_rule == "max-slope"
    with pytest.raises(ValueError):
        SchemeSpec("direct-1d", 2)
    with pytest.raises(ValueError):
        SchemeSpec("upwind")
    with pytest.raises(ValueError):
        SchemeSpec(gradient_rule="average")
    g2 = build_disk_grid(1.0, 0.1, 2)
    with pytest.raises(ValueError):
        inf_laplacian(Field.zeros(g2), SchemeSpec())
    with pytest.raises(ValueError):
        SchemeSpec("directional-2d", 1).check(g2)


@pytest.mark.parametrize("grid", [interval(), build_disk_grid(1.0, 0.05, 2),
                                  build_rectangle_grid(0, 1, 0, 1, 0.05)])
def test_constant_gives_zero(grid):
    f = Field.from_function(grid, lambda p: np.full(len(p), 3.0),
                            homogeneous=False)
    assert np.all(inf_laplacian(f).values == 0.0)


def test_affine_1d_zero():
    g = interval()
    f = Field.from_function(g, lambda p: p[:, 0], homogeneous=False)
    lap = inf_laplacian(f).values
    np.testing.assert_allclose(lap[g.interior], 0.0, atol=1e-9)
    assert max_slope(f) == pytest.approx(1.0)


def test_affine_2d_zero_on_full_stencils():
    g = build_rectangle_grid(0, 1, 0, 1, 0.05)
    f = Field.from_function(g, lambda p: 0.3 * p[:, 0] - 1.7 * p[:, 1],
                            homogeneous=False)
    lap = inf_laplacian(f).values
    np.testing.assert_allclose(lap[full_stencil_nodes(g)], 0.0, atol=1e-9)


def test_boundary_nodes_zero():
    g = build_disk_grid(1.0, 0.05, 2)
    f = Field.from_function(g, lambda p: (p ** 2).sum(1), homogeneous=False)
    assert np.all(inf_laplacian(f).values[g.boundary] == 0.0)


def test_cubic_at_half():
    # (3 x^2)^2 * 6 x at x = 0.5 is 0.5625 * 3
    exact = 1.6875
    for h, n in ((1e-2, 201), (1e-3, 2001)):
        g = interval(n)
        f = Field.from_function(g, lambda p: p[:, 0] ** 3, homogeneous=False)
        i = int(np.argmin(np.abs(g.points[:, 0] - 0.5)))
        err = abs(inf_laplacian(f).values[i] - exact)
        assert err <= 10 * h


def test_quadratic_order_1d():
    # |x|^2/4: u' = x/2, u'' = 1/2, so Lap_inf u = x^2/8
    grids = [interval(n) for n in (101, 201, 401, 801)]
    order = consistency_order(lambda p: p[:, 0] ** 2 / 4,
                              lambda p: p[:, 0] ** 2 / 8, grids)
    assert order >= 0.9


def test_cosine_order_1d():
    grids = [interval(n) for n in (101, 201, 401, 801)]
    order = consistency_order(
        lambda p: np.cos(p[:, 0]),
        lambda p: -np.sin(p[:, 0]) ** 2 * np.cos(p[:, 0]), grids)
    assert order >= 0.9


def test_affine_flagged_exact():
    grids = [interval(n) for n in (51, 101, 201)]
    assert consistency_order(lambda p: 2 * p[:, 0] + 1,
                             lambda p: np.zeros(len(p)), grids) == math.inf
    with pytest.raises(ValueError):
        consistency_order(lambda p: p[:, 0], lambda p: 0 * p[:, 0], grids[:2])


def test_quadratic_order_2d_along_axis():
    # radial |x|^2/4 has Lap_inf = |x|^2/8; on the x-axis the gradient is a
    # stencil direction, so the directional rule is consistent there
    grids = [build_rectangle_grid(-1, 1, -1, 1, h) for h in (0.05, 0.025,
                                                              0.0125)]

    def on_axis(p):
        return (np.abs(p[:, 1]) < 1e-12) & (np.abs(p[:, 0]) > 0.2) & \
            (np.abs(p[:, 0]) < 0.8)

    rows = residual_table(lambda p: (p ** 2).sum(1) / 4,
                          lambda p: (p ** 2).sum(1) / 8, grids, region=on_axis)
    hs, res = np.array(rows)[:, 0], np.array(rows)[:, 1]
    assert np.all(np.diff(res) < 0)
    assert np.polyfit(np.log(hs), np.log(res), 1)[0] >= 0.9


def test_centered_rule_1d():
    g = interval(401)
    f = Field.from_function(g, lambda p: np.sin(p[:, 0]), homogeneous=False)
    exact = -np.cos(g.points[:, 0]) ** 2 * np.sin(g.points[:, 0])
    lap = inf_laplacian(f, SchemeSpec(gradient_rule="centered")).values
    assert np.max(np.abs(lap - exact)[g.interior]) < 1e-4


# --- symmetry properties ---------------------------------------------------

values_1d = arrays(np.float64, 41, elements=st.floats(-1, 1))
scales = st.sampled_from([0.25, 0.5, 2.0, 4.0])
GRID_1D = interval(41)
GRID_2D = build_disk_grid(1.0, 0.2, 2)


def _lap(grid, vals):
    return inf_laplacian(Field(grid, vals)).values


@settings(max_examples=50, deadline=None)
@given(values_1d, scales)
def test_cubic_homogeneity_1d(v, lam):
    np.testing.assert_allclose(_lap(GRID_1D, lam * v), lam ** 3 *
                               _lap(GRID_1D, v), rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(values_1d)
def test_odd_symmetry_1d(v):
    np.testing.assert_allclose(_lap(GRID_1D, -v), -_lap(GRID_1D, v),
                               atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(values_1d, st.floats(-10, 10))
def test_translation_invariance_1d(v, c):
    np.testing.assert_allclose(_lap(GRID_1D, v + c), _lap(GRID_1D, v),
                               atol=1e-9 * (1 + abs(c)) * 1600)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, GRID_2D.n_nodes, elements=st.floats(-1, 1)), scales)
def test_cubic_homogeneity_2d(v, lam):
    np.testing.assert_allclose(_lap(GRID_2D, lam * v), lam ** 3 *
                               _lap(GRID_2D, v), rtol=1e-12, atol=1e-12)


def test_odd_symmetry_2d_generic():
    rng = np.random.default_rng(7)
    v = rng.uniform(-1, 1, GRID_2D.n_nodes)
    np.testing.assert_allclose(_lap(GRID_2D, -v), -_lap(GRID_2D, v),
                               atol=1e-12)


def test_rotation_by_quarter_turn_2d():
    # the 16-direction stencil is invariant under (x, y) -> (-y, x)
    g = build_rectangle_grid(-1, 1, -1, 1, 0.1)

    def u(p):
        return np.exp(p[:, 0]) * np.sin(2 * p[:, 1]) + p[:, 0] ** 2

    a = _lap(g, Field.from_function(g, u, homogeneous=False).values)
    rot = Field.from_function(g, lambda p: u(np.column_stack([p[:, 1],
                                                              -p[:, 0]])),
                              homogeneous=False)
    b = _lap(g, rot.values)
    nx, ny = g.shape
    # node (i, j) of the rotated field sees u at node (j, nx-1-i)
    A, B = a.reshape(nx, ny), b.reshape(nx, ny)
    full = np.zeros(g.n_nodes, bool)
    full[full_stencil_nodes(g)] = True
    F = full.reshape(nx, ny)
    np.testing.assert_allclose(B[F], A.T[::-1, :][F], atol=1e-9)

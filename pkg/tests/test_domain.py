import json
import math

import numpy as np
import pytest

from infheat.domain import (BOUNDARY, EXTERIOR, INTERIOR, Domain, Field,
                            build_disk_grid, build_interval_grid,
                            build_rectangle_grid, distance_to_boundary,
                            stencil_directions)


def test_interval_five_nodes():
    g = build_interval_grid(-1, 1, 5)
    assert g.h == 0.5
    np.testing.assert_array_equal(g.points[g.boundary, 0], [-1.0, 1.0])
    assert list(g.mask) == [BOUNDARY, INTERIOR, INTERIOR, INTERIOR, BOUNDARY]


def test_interval_interior_count():
    g = build_interval_grid(0, 1, 101)
    assert math.isclose(g.h, 0.01)
    assert g.interior.size == 99


@pytest.mark.parametrize("a,b,n", [(1, 1, 5), (2, 1, 5), (0, 1, 2)])
def test_interval_rejects_degenerate(a, b, n):
    with pytest.raises(ValueError):
        build_interval_grid(a, b, n)


def test_interval_sphere_radii():
    g = build_interval_grid(-1, 1, 11)
    assert g.domain.exterior_sphere_radius == 2.0
    assert g.domain.interior_sphere_radius == 1.0


def test_stencil_directions_16():
    d = stencil_directions(2, 2)
    assert d.shape == (16, 2)
    assert all(math.gcd(abs(i), abs(j)) == 1 for i, j in d)
    ang = np.arctan2(d[:, 1], d[:, 0]) % (2 * np.pi)
    assert np.all(np.diff(ang) > 0)
    assert tuple(d[0]) == (1, 0)


def test_stencil_directions_small():
    assert stencil_directions(2, 1).shape == (8, 2)
    np.testing.assert_array_equal(stencil_directions(1, 1), [[1], [-1]])
    with pytest.raises(ValueError):
        stencil_directions(2, 0)


def test_disk_mask_approximates_circle():
    g = build_disk_grid(1.0, 0.1, 2)
    r = g.radius()
    assert np.all(r[g.interior] < 1.0)
    assert np.all(r[g.boundary] >= 1.0)
    # boundary layer is within h of the circle
    assert np.all(r[g.boundary] - 1.0 <= g.h + 1e-12)
    # every interior node has its four axis neighbours among live nodes
    live = g.mask != EXTERIOR
    nx, ny = g.shape
    ii, jj = np.unravel_index(g.interior, g.shape)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        assert np.all(live[(ii + di) * ny + (jj + dj)])


def test_disk_too_coarse():
    with pytest.raises(ValueError):
        build_disk_grid(1.0, 0.6, 1)


def test_disk_area_scaling():
    # brute-force oracle: count lattice points in the open disk
    def lattice_count(rho, h):
        m = int(rho / h) + 1
        k = np.arange(-m, m + 1) * h
        X, Y = np.meshgrid(k, k)
        return int(np.sum(np.hypot(X, Y) < rho))

    g1 = build_disk_grid(1.0, 0.1, 2)
    g2 = build_disk_grid(2.0, 0.1, 2)
    assert g1.interior.size == lattice_count(1.0, 0.1)
    assert g2.interior.size == lattice_count(2.0, 0.1)
    assert abs(g2.interior.size / g1.interior.size - 4) <= 0.4


def test_neighbors_only_live_targets():
    g = build_disk_grid(1.0, 0.1, 2)
    nb = g.neighbors
    assert nb.shape == (g.interior.size, 16)
    ok = nb >= 0
    assert np.all(g.mask[nb[ok]] != EXTERIOR)
    # targets sit at the advertised offsets
    row, col = np.nonzero(ok)
    offs = (g.points[nb[row, col]] - g.points[g.interior[row]]) / g.h
    np.testing.assert_allclose(offs, g.directions[col], atol=1e-9)


def test_rectangle_grid():
    g = build_rectangle_grid(0, 1, 0, 2, 0.25)
    assert g.shape == (5, 9)
    assert g.interior.size == 3 * 7
    assert g.domain.interior_sphere_radius is None
    with pytest.raises(ValueError):
        build_rectangle_grid(0, 1, 0, 1, 0.3)


@pytest.mark.parametrize("grid,x,expected", [
    (build_interval_grid(-1, 1, 201), (0.0,), 1.0),
    (build_interval_grid(-1, 1, 201), (1.0,), 0.0),
    (build_disk_grid(1.0, 0.1, 2), (0.6, 0.0), 0.4),
])
def test_distance_to_boundary(grid, x, expected):
    node = int(np.argmin(grid.radius(x)))
    assert distance_to_boundary(grid, node) == pytest.approx(expected,
                                                             abs=1e-12)


def test_distance_rejects_exterior():
    g = build_disk_grid(1.0, 0.1, 2)
    with pytest.raises(ValueError):
        distance_to_boundary(g, int(np.flatnonzero(g.mask == EXTERIOR)[0]))


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain("annulus", (0, 1))
    with pytest.raises(ValueError):
        Domain("disk", (0, 0, 1), interior_sphere_radius=2.0)
    with pytest.raises(ValueError):
        Domain("interval", (0, 1), exterior_sphere_radius=-1.0)


def test_grid_json_manifest():
    g = build_disk_grid(1.0, 0.1, 2)
    d = json.loads(g.to_json())
    assert d["kind"] == "disk" and d["h"] == 0.1 and d["k"] == 2
    assert d["node_count"] == g.n_nodes
    assert g.same_as(build_disk_grid(1.0, 0.1, 2))
    assert not g.same_as(build_disk_grid(1.0, 0.05, 2))


def test_field_invariants():
    g = build_interval_grid(-1, 1, 11)
    f = Field.from_function(g, lambda p: 1 - p[:, 0] ** 2 + 0.5)
    assert f.values[0] == 0 and f.values[-1] == 0
    assert f.validate(nonnegative=True, homogeneous=True) is f
    with pytest.raises(ValueError):
        f.values[3] = 1.0
    with pytest.raises(ValueError):
        Field(g, np.full(g.n_nodes, np.nan))
    with pytest.raises(ValueError):
        Field(g, np.zeros(3))
    neg = Field(g, -np.ones(g.n_nodes))
    with pytest.raises(ValueError):
        neg.validate(nonnegative=True)
    with pytest.raises(ValueError):
        neg.validate(homogeneous=True)
    assert Field.zeros(g).sup() == 0.0
    assert f.scaled(2.0).sup() == pytest.approx(2 * f.sup())

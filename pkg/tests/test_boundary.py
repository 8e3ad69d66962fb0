import numpy as np
import pytest

from planimm.boundary import EDGES, BoundaryData
from planimm.field import Grid2
from planimm.maps import get_map


def test_from_field_edges_and_apply(grid33):
    f = get_map("rotation", theta=0.3).sample(grid33)
    b = BoundaryData.from_field(f)
    np.testing.assert_array_equal(b.bottom, f.values[:, 0])
    np.testing.assert_array_equal(b.right, f.values[-1, :])
    restored = b.apply(np.zeros_like(f.values))
    mask = grid33.boundary_mask()
    np.testing.assert_array_equal(restored[mask], f.values[mask])
    assert b.mismatch(f) == 0.0


def test_corner_mismatch_rejected():
    g = Grid2(4, 5)
    f = get_map("identity").sample(g)
    b = BoundaryData.from_field(f)
    left = b.left.copy()
    left[0] += 1e-6
    with pytest.raises(ValueError, match="corner"):
        BoundaryData(g, b.bottom, b.right, b.top, left)


def test_blend_reproduces_bilinear_maps_exactly():
    g = Grid2(9, 13, -1.0, 0.0, 1.0, 3.0)
    for name in ("identity", "rotation", "scale", "shear"):
        f = get_map(name).sample(g)
        np.testing.assert_allclose(BoundaryData.from_field(f).blend().values, f.values, atol=1e-14)


def test_blend_keeps_boundary(grid33):
    f = get_map("sinusoidal", amplitude=0.2).sample(grid33)
    b = BoundaryData.from_function(grid33, lambda x, y: (x + 0.1 * np.sin(3 * y) * x, y + x * x))
    assert b.mismatch(b.blend()) == 0.0


def test_evaluate_interpolates_edges():
    g = Grid2(33, 33)
    fn = lambda x, y: (np.sin(2 * x + y), np.cos(x - 3 * y))
    b = BoundaryData.from_function(g, fn)
    s = np.linspace(0.013, 0.987, 7)
    for x, y in ((s, 0 * s), (1 + 0 * s, s), (s, 1 + 0 * s), (0 * s, s)):
        # not-a-knot spline error ~ h^4 |f| with |f| up to 81 here
        np.testing.assert_allclose(b.evaluate(x, y), np.stack(fn(x, y), -1), atol=81 * g.hx ** 4)
    assert [EDGES[k] for k in b.edge_of(np.array([0.5, 1.0, 0.5, 0.0]), np.array([0.0, 0.5, 1.0, 0.5]))] == list(EDGES)

import numpy as np
import pytest
import sympy as sp

from planimm.boundary import BoundaryData
from planimm.compat import IncompatiblePrescription, boundary_circulation, compatibility_defect
from planimm.field import Grid2, MapField, ScalarField, curl
from planimm.maps import get_map


@pytest.mark.parametrize("theta", [0.3, 1.0])
def test_rotation_is_compatible_to_roundoff(theta, grid33):
    f = get_map("rotation", theta=theta).sample(grid33)
    r = compatibility_defect(curl(f), BoundaryData.from_field(f))
    assert abs(r.defect) < 1e-10
    assert r.interior_integral == pytest.approx(2 * np.sin(theta), abs=1e-12)
    assert r.ok()


def test_shear_integral_sign():
    # curl of (x + k y, y) is -k; Green's theorem fixes the sign of the boundary term.
    f = get_map("shear", k=0.5).sample(Grid2.square(17))
    r = compatibility_defect(curl(f), BoundaryData.from_field(f))
    assert r.interior_integral == pytest.approx(-0.5, abs=1e-13)
    assert r.boundary_integral == pytest.approx(-0.5, abs=1e-13)


def test_inconsistent_prescription_defect_is_area(grid33):
    b = BoundaryData.from_field(get_map("identity").sample(grid33))
    r = compatibility_defect(ScalarField(grid33, np.ones(grid33.shape)), b)
    assert abs(r.defect - 1.0) < 1e-10
    assert not r.ok()
    assert "defect" in r.summary()
    assert set(r.to_dict()) == {"interior_integral", "boundary_integral", "defect", "relative_defect"}
    assert issubclass(IncompatiblePrescription, ValueError)


def test_smooth_map_against_symbolic_circulation():
    x, y = sp.symbols("x y")
    u, v = sp.sin(x * y) + x, sp.exp(x) * y + y
    exact = float(sp.integrate(sp.integrate(sp.diff(v, x) - sp.diff(u, y), (x, 0, 1)), (y, 0, 1)))
    fu, fv = sp.lambdify((x, y), u), sp.lambdify((x, y), v)
    errs = []
    for n in (17, 33, 65):
        g = Grid2.square(n)
        X, Y = g.mesh()
        f = MapField(g, np.stack([fu(X, Y), fv(X, Y)], -1))
        total, _ = boundary_circulation(BoundaryData.from_field(f))
        errs.append(abs(total - exact))
        r = compatibility_defect(curl(f), BoundaryData.from_field(f))
        assert abs(r.interior_integral - exact) < 1e-2
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


@pytest.mark.parametrize("name", ["identity", "rotation", "scale", "shear", "sinusoidal"])
def test_builtin_maps_are_compatible(name):
    from planimm.maps import MAPS

    for n in (17, 33, 65):
        f = MAPS[name]().sample(Grid2.square(n))
        r = compatibility_defect(curl(f), BoundaryData.from_field(f))
        assert abs(r.defect) < 1e-12

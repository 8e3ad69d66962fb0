"""Necessary compatibility between prescribed curl and boundary values.

Integrating the curl over the rectangle must reproduce minus the boundary
integral of ``phi . T``, where ``T = J n`` is obtained by rotating the
outward normal ``n`` clockwise.  Equivalently the curl integral equals the
counterclockwise circulation of ``phi``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import trapezoid

from planimm import ga2
from planimm.boundary import BoundaryData
from planimm.field import ScalarField

__all__ = ["CompatReport", "IncompatiblePrescription", "compatibility_defect",
           "boundary_circulation", "DEFAULT_RELATIVE_TOL"]

DEFAULT_RELATIVE_TOL = 1e-6

_OUTWARD_NORMALS = {
    "bottom": (0.0, -1.0),
    "right": (1.0, 0.0),
    "top": (0.0, 1.0),
    "left": (-1.0, 0.0),
}


class IncompatiblePrescription(ValueError):
    """Curl and boundary data violate the integral compatibility condition."""


@dataclass(frozen=True)
class CompatReport:
    interior_integral: float
    boundary_integral: float
    defect: float
    relative_defect: float

    def ok(self, rel_tol: float = DEFAULT_RELATIVE_TOL) -> bool:
        return self.relative_defect < rel_tol

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        return (f"integral of curl = {self.interior_integral:.12g}, "
                f"-boundary integral of phi.T = {self.boundary_integral:.12g}\n"
                f"defect = {self.defect:.3e} (relative {self.relative_defect:.3e})")


def _edge_terms(b: BoundaryData):
    g = b.grid
    for name, n in _OUTWARD_NORMALS.items():
        tangent = ga2.j_rotate(np.array(n))
        values = getattr(b, name)
        coord = g.x if name in ("bottom", "top") else g.y
        yield values @ tangent, coord


def boundary_circulation(b: BoundaryData) -> tuple[float, float]:
    """``-integral phi . T ds`` over the boundary and the matching integral of ``|phi . T|``."""
    total = 0.0
    magnitude = 0.0
    for phi_t, coord in _edge_terms(b):
        total += trapezoid(phi_t, coord)
        magnitude += trapezoid(np.abs(phi_t), coord)
    return -float(total), float(magnitude)


def compatibility_defect(crl: ScalarField, b: BoundaryData) -> CompatReport:
    """Trapezoidal check of the curl/boundary integral identity.

    The relative defect divides by the integrals of ``|curl|`` and ``|phi . T|``
    so that prescriptions whose two sides both vanish are judged sensibly.
    """
    if crl.grid != b.grid:
        raise ValueError("curl field and boundary data live on different grids")
    g = crl.grid
    interior = float(trapezoid(trapezoid(crl.values, g.y, axis=1), g.x))
    interior_mag = float(trapezoid(trapezoid(np.abs(crl.values), g.y, axis=1), g.x))
    boundary, boundary_mag = boundary_circulation(b)
    defect = interior - boundary
    scale = interior_mag + boundary_mag
    relative = abs(defect) / scale if scale > 0 else 0.0
    return CompatReport(interior, boundary, defect, relative)

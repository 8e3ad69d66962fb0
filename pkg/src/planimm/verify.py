"""Self-checks shared by the command line and the acceptance tests."""
from __future__ import annotations

import numpy as np

from planimm import ga2
from planimm.field import Grid2, curl, jacobian_det
from planimm.maps import AnalyticMap, sinusoidal

__all__ = ["algebra_suite", "operator_errors", "convergence_table", "ALGEBRA_TOL"]

ALGEBRA_TOL = 1e-12


def _rand_mv(rng, n):
    return ga2.Multivector2(*rng.uniform(-1.0, 1.0, (4, n)))


def _rand_vec(rng, n):
    return ga2.vector(*rng.uniform(-1.0, 1.0, (2, n)))


def _maxdiff(a: ga2.Multivector2, b: ga2.Multivector2) -> float:
    return float(np.abs(a.components() - ga2._coerce(b).components()).max())


def algebra_suite(n: int = 10_000, seed: int = 0) -> dict[str, float]:
    """Largest violation of each Cl(2,0) identity over ``n`` random samples.

    The duality relations are checked with the dual of ``w`` taken as
    ``w J``; with ``J`` multiplied from the left both relations hold with the
    opposite sign (reported separately as ``duality, left J``).
    """
    rng = np.random.default_rng(seed)
    E1, E2, J = ga2.E1, ga2.E2, ga2.J
    u, v, w = (_rand_vec(rng, n) for _ in range(3))
    A, B, C = (_rand_mv(rng, n) for _ in range(3))
    dot = ga2.Multivector2(s=v.v1 * w.v1 + v.v2 * w.v2)
    wedge = ga2.Multivector2(b=v.v1 * w.v2 - v.v2 * w.v1)
    vw, wv = v * w, w * v
    out = {
        "e1^2 = 1": _maxdiff(E1 * E1, 1.0),
        "e2^2 = 1": _maxdiff(E2 * E2, 1.0),
        "e1 . e2 = 0": _maxdiff(ga2.inner(E1, E2), 0.0),
        "e1e2 = -e2e1": _maxdiff(E1 * E2, -(E2 * E1)),
        "J^2 = -1": _maxdiff(J * J, -1.0),
        "vw + wv = 2 v.w": _maxdiff(vw + wv, 2 * dot),
        "vw - wv = 2 v^w": _maxdiff(vw - wv, 2 * wedge),
        "vw = v.w + v^w": _maxdiff(vw, dot + wedge),
        "duality J(v.w) = v^(wJ)": _maxdiff(J * dot, ga2.outer(v, w * J)),
        "duality J(v^w) = v.(wJ)": _maxdiff(J * wedge, ga2.inner(v, w * J)),
        "duality, left J: J(v.w) = -v^(Jw)": _maxdiff(J * dot, -ga2.outer(v, J * w)),
        "duality, left J: J(v^w) = -v.(Jw)": _maxdiff(J * wedge, -ga2.inner(v, J * w)),
        "vJ = -Jv": _maxdiff(v * J, -(J * v)),
        "(uv)w = u(vw)": _maxdiff((u * v) * w, u * (v * w)),
        "(AB)C = A(BC)": _maxdiff((A * B) * C, A * (B * C)),
        "A = sum of grades": _maxdiff(A, A[0] + A[1] + A[2]),
        "grade projection idempotent": max(_maxdiff(A[k][k], A[k]) for k in range(3)),
        "j_rotate = left J": _maxdiff(ga2.j_rotate(v), J * v),
        "(Jv).(Jw) = v.w": _maxdiff(ga2.inner(J * v, J * w), dot),
    }
    return out


def operator_errors(m: AnalyticMap, n: int) -> tuple[float, float]:
    """Max-norm errors of the discrete Jacobian determinant and curl on an ``n x n`` unit grid."""
    g = Grid2.square(n)
    f = m.sample(g)
    X, Y = g.mesh()
    e_jac = np.abs(jacobian_det(f).values - m.jac(X, Y)).max()
    e_curl = np.abs(curl(f).values - m.curl(X, Y)).max()
    return float(e_jac), float(e_curl)


def convergence_table(m: AnalyticMap | None = None, sizes=(17, 33, 65)) -> list[dict]:
    """Error and halving ratio of Jac and curl for each grid size."""
    m = m or sinusoidal(0.1)
    rows = []
    prev = None
    for n in sizes:
        ej, ec = operator_errors(m, n)
        row = {"map": m.label(), "n": n, "h": 1.0 / (n - 1), "jac_error": ej, "curl_error": ec,
               "jac_ratio": None, "curl_ratio": None}
        if prev is not None:
            row["jac_ratio"] = prev[0] / ej if ej > 0 else float("inf")
            row["curl_ratio"] = prev[1] / ec if ec > 0 else float("inf")
        rows.append(row)
        prev = (ej, ec)
    return rows

"""Induced metrics and the eigen-expansion that recovers them from d(J phi).

The trace and determinant of ``d(J phi)`` are the curl and Jacobian
determinant of ``phi``.  Given an eigenbasis ``f_i`` of ``d(J phi)`` with
eigenvalues ``lambda_i`` and dual covectors ``omega^i``, the induced metric is

    g(v, w) = sum_ij lambda_i lambda_j omega^i(v) omega^j(w) (f_i . f_j)

with ``.`` the complex-bilinear (not Hermitian) dot product.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from planimm.field import (
    IMMERSION_THRESHOLD,
    Grid2,
    MapField,
    ScalarField,
    curl,
    differential_field,
    dual_map,
    jacobian_det,
    require_immersion,
    write_field,
    read_field,
)

__all__ = [
    "Metric2",
    "MetricField",
    "EigenData",
    "CharData",
    "DefectiveMatrix",
    "InconsistentEigenData",
    "induced_metric",
    "char_data_from_prescription",
    "eigendecompose",
    "metric_from_eigendata",
    "verify_lemma1",
    "Lemma1Report",
]

IMAG_TOL = 1e-9


class DefectiveMatrix(ValueError):
    """The matrix has a repeated eigenvalue with a one-dimensional eigenspace."""


class InconsistentEigenData(ValueError):
    pass


@dataclass(frozen=True)
class Metric2:
    g11: float
    g12: float
    g22: float

    @classmethod
    def from_matrix(cls, m) -> Metric2:
        m = np.asarray(m)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    def is_positive_definite(self) -> bool:
        return self.g11 > 0 and self.g11 * self.g22 - self.g12 ** 2 > 0


@dataclass(frozen=True, eq=False)
class MetricField:
    """Symmetric tensor per node; ``values`` holds ``(g11, g12, g22)`` on the last axis."""

    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (*self.grid.shape, 3):
            raise ValueError(f"MetricField values must have shape {(*self.grid.shape, 3)}")
        if not np.all(np.isfinite(values)):
            raise ValueError("MetricField values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_tensors(cls, grid: Grid2, g: np.ndarray) -> MetricField:
        return cls(grid, np.stack([g[..., 0, 0], 0.5 * (g[..., 0, 1] + g[..., 1, 0]), g[..., 1, 1]], -1))

    @classmethod
    def constant(cls, grid: Grid2, g11: float, g12: float, g22: float) -> MetricField:
        return cls(grid, np.broadcast_to([g11, g12, g22], (*grid.shape, 3)).copy())

    def tensors(self) -> np.ndarray:
        g11, g12, g22 = np.moveaxis(self.values, -1, 0)
        return np.stack([np.stack([g11, g12], -1), np.stack([g12, g22], -1)], -2)

    def at(self, node: tuple[int, int]) -> Metric2:
        return Metric2(*map(float, self.values[node]))

    def is_positive_definite(self) -> bool:
        g11, g12, g22 = np.moveaxis(self.values, -1, 0)
        return bool(np.all(g11 > 0) and np.all(g11 * g22 - g12 ** 2 > 0))

    def save(self, path) -> None:
        write_field(path, self.grid, self.values)

    @classmethod
    def load(cls, path) -> MetricField:
        grid, values = read_field(path)
        return cls(grid, values)


def induced_metric(f: MapField) -> MetricField:
    """Pullback ``d phi^T d phi`` of the Euclidean metric."""
    require_immersion(f)
    d = differential_field(f)
    return MetricField.from_tensors(f.grid, np.swapaxes(d, -1, -2) @ d)


@dataclass(frozen=True)
class CharData:
    """Trace and determinant of ``d(J phi)`` per node."""

    trace: np.ndarray
    det: np.ndarray
    degenerate: np.ndarray

    def roots(self) -> tuple[np.ndarray, np.ndarray]:
        """Roots of ``x^2 - t x + d``, ordered by (real, imag)."""
        disc = np.sqrt((self.trace ** 2 - 4 * self.det).astype(complex))
        lo, hi = 0.5 * (self.trace - disc), 0.5 * (self.trace + disc)
        swap = (lo.real > hi.real) | ((lo.real == hi.real) & (lo.imag > hi.imag))
        return np.where(swap, hi, lo), np.where(swap, lo, hi)


def char_data_from_prescription(jac: ScalarField, crl: ScalarField,
                                threshold: float = IMMERSION_THRESHOLD) -> CharData:
    if jac.grid != crl.grid:
        raise ValueError("jacobian and curl fields live on different grids")
    return CharData(np.array(crl.values), np.array(jac.values), np.abs(jac.values) < threshold)


@dataclass(frozen=True)
class EigenData:
    """Eigenpairs of a real 2x2 matrix with dual covectors.

    ``f`` holds eigenvectors as columns, ``omega`` the dual covectors as rows,
    so ``omega @ f`` is the identity.
    """

    lambdas: np.ndarray  # (2,) complex
    f: np.ndarray  # (2, 2) complex, columns
    omega: np.ndarray  # (2, 2) complex, rows
    defective: bool = False

    @property
    def lambda1(self) -> complex:
        return complex(self.lambdas[0])

    @property
    def lambda2(self) -> complex:
        return complex(self.lambdas[1])

    @property
    def f1(self) -> np.ndarray:
        return self.f[:, 0]

    @property
    def f2(self) -> np.ndarray:
        return self.f[:, 1]

    @property
    def omega1(self) -> np.ndarray:
        return self.omega[0]

    @property
    def omega2(self) -> np.ndarray:
        return self.omega[1]

    def reconstruct(self) -> np.ndarray:
        """``sum_i lambda_i f_i (x) omega^i``."""
        return (self.f * self.lambdas) @ self.omega


def _normalize(v: np.ndarray) -> np.ndarray:
    """Scale so the largest-modulus component is 1; ties go to the last component."""
    mod = np.abs(v)
    k = len(v) - 1 - int(np.argmax(mod[::-1] >= mod.max() * (1 - 1e-12)))
    return v / v[k]


def _eigenvector(m: np.ndarray, lam: complex) -> np.ndarray:
    # rows of (m - lam I) are orthogonal to the eigenvector; use the larger one
    r1 = np.array([m[0, 1], lam - m[0, 0]], dtype=complex)
    r2 = np.array([lam - m[1, 1], m[1, 0]], dtype=complex)
    return _normalize(r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2)


def eigendecompose(m, tol: float | None = None) -> EigenData:
    """Eigenvalues, normalized eigenvectors, and dual covectors of a real 2x2 matrix.

    Eigenvalues are sorted by (real, imag).  A complex pair gets conjugate
    eigenvectors.  When the discriminant vanishes (within a scale-aware
    tolerance) and the eigenspace is one-dimensional the result is flagged
    ``defective`` and carries no usable covectors.
    """
    m = np.asarray(m, dtype=float)
    scale = 1.0 + np.abs(m).sum(axis=1).max()
    if tol is None:
        tol = 1e-10 * scale
    t = m[0, 0] + m[1, 1]
    d = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = t * t - 4 * d
    if abs(disc) < tol:
        lam = 0.5 * t
        if np.abs(m - lam * np.eye(2)).max() > np.sqrt(tol):
            v = _eigenvector(m, lam)
            f = np.column_stack([v, v])
            return EigenData(np.array([lam, lam], dtype=complex), f,
                             np.full((2, 2), np.nan, dtype=complex), defective=True)
        f = np.eye(2, dtype=complex)
        return EigenData(np.array([lam, lam], dtype=complex), f, f.copy())
    root = np.sqrt(complex(disc))
    lams = sorted([0.5 * (t - root), 0.5 * (t + root)], key=lambda z: (z.real, z.imag))
    if disc < 0:
        f2 = _eigenvector(m, lams[1])
        f = np.column_stack([np.conj(f2), f2])
        lams[0] = np.conj(lams[1])
    else:
        lams = [complex(z.real) for z in lams]
        f = np.column_stack([_eigenvector(m, z) for z in lams])
    omega = np.linalg.inv(f)
    return EigenData(np.array(lams), f, omega)


def metric_from_eigendata(e: EigenData, imag_tol: float = IMAG_TOL) -> Metric2:
    """Induced metric from eigendata of ``d(J phi)``."""
    if e.defective:
        raise DefectiveMatrix("metric expansion needs a diagonalizable d(J phi)")
    gram = e.f.T @ e.f  # f_i . f_j, complex-bilinear
    lam = e.lambdas
    core = (lam[:, None] * lam[None, :]) * gram
    g = e.omega.T @ core @ e.omega
    if np.abs(g.imag).max() >= imag_tol:
        raise InconsistentEigenData(f"imaginary residue {np.abs(g.imag).max():.3e} in metric")
    return Metric2.from_matrix(g.real)


@dataclass
class Lemma1Report:
    max_discrepancy: float
    max_char_discrepancy: float
    discrepancy: np.ndarray = field(repr=False)
    defective_nodes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.defective_nodes

    def to_dict(self) -> dict:
        return {
            "max_discrepancy": self.max_discrepancy,
            "max_char_discrepancy": self.max_char_discrepancy,
            "defective_nodes": [list(map(int, n)) for n in self.defective_nodes],
        }


def verify_lemma1(f: MapField) -> Lemma1Report:
    """Compare the eigen-expansion metric of ``d(J phi)`` with ``d phi^T d phi`` node by node.

    Also checks that (trace, det) of ``d(J phi)`` equal (curl, Jac) of ``phi``.
    Defective nodes are excluded from the maximum and listed in the report.
    """
    g_direct = induced_metric(f).values
    dj = differential_field(dual_map(f))
    char = char_data_from_prescription(jacobian_det(f), curl(f))
    tr = dj[..., 0, 0] + dj[..., 1, 1]
    det = dj[..., 0, 0] * dj[..., 1, 1] - dj[..., 0, 1] * dj[..., 1, 0]
    char_err = np.maximum(np.abs(tr - char.trace), np.abs(det - char.det))

    disc = np.full(f.grid.shape, np.nan)
    defective = []
    for i in range(f.grid.nx):
        for j in range(f.grid.ny):
            e = eigendecompose(dj[i, j])
            if e.defective:
                defective.append((i, j))
                continue
            g = metric_from_eigendata(e)
            disc[i, j] = np.abs(np.array([g.g11, g.g12, g.g22]) - g_direct[i, j]).max()
    finite = disc[np.isfinite(disc)]
    return Lemma1Report(
        max_discrepancy=float(finite.max()) if finite.size else float("nan"),
        max_char_discrepancy=float(char_err.max()),
        discrepancy=disc,
        defective_nodes=defective,
    )

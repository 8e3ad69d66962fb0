"""Sampled plane maps on rectangular grids and their first-order operators.

Arrays are indexed ``[i, j]`` with ``i`` along x and ``j`` along y.
Derivatives use central differences in the interior and second-order
one-sided three-point stencils on the boundary rows and columns, so every
operator is exact on polynomials of degree two.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from planimm import ga2

__all__ = [
    "Grid2",
    "MapField",
    "ScalarField",
    "NotAnImmersion",
    "IMMERSION_THRESHOLD",
    "differential",
    "differential_field",
    "jacobian_det",
    "jacobian_det_ga",
    "curl",
    "curl_via_dual",
    "dual_map",
    "min_abs_det",
    "is_immersion",
    "require_immersion",
    "derivative_matrix",
    "write_field",
    "read_field",
]

IMMERSION_THRESHOLD = 1e-8
FIELD_MAGIC = "# planimm field v1"


class NotAnImmersion(ValueError):
    """The differential of a map is (numerically) rank deficient somewhere."""


@dataclass(frozen=True)
class Grid2:
    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"grid needs at least 3 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("grid rectangle must satisfy x1 > x0 and y1 > y0")

    @classmethod
    def square(cls, n: int) -> Grid2:
        return cls(n, n)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask

    def contains(self, x, y, strict: bool = False):
        if strict:
            return (self.x0 < x) & (x < self.x1) & (self.y0 < y) & (y < self.y1)
        return (self.x0 <= x) & (x <= self.x1) & (self.y0 <= y) & (y <= self.y1)

    def header(self) -> str:
        return f"{self.nx} {self.ny} {self.x0!r} {self.y0!r} {self.x1!r} {self.y1!r}"

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "x0": self.x0, "y0": self.y0,
                "x1": self.x1, "y1": self.y1}


@dataclass(frozen=True, eq=False)
class MapField:
    """Samples of a map ``M -> R^2``; ``values`` has shape ``(nx, ny, 2)``."""

    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (*self.grid.shape, 2):
            raise ValueError(f"MapField values must have shape {(*self.grid.shape, 2)}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("MapField values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def u(self) -> np.ndarray:
        return self.values[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.values[..., 1]

    def replace(self, values) -> MapField:
        return MapField(self.grid, values)

    def save(self, path) -> None:
        write_field(path, self.grid, self.values)

    @classmethod
    def load(cls, path) -> MapField:
        grid, values = read_field(path)
        if values.shape[-1] != 2:
            raise ValueError(f"{path}: expected 2 components, found {values.shape[-1]}")
        return cls(grid, values)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape == ():
            values = np.full(self.grid.shape, float(values))
        if values.shape != self.grid.shape:
            raise ValueError(f"ScalarField values must have shape {self.grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("ScalarField values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def save(self, path) -> None:
        write_field(path, self.grid, self.values[..., None])

    @classmethod
    def load(cls, path) -> ScalarField:
        grid, values = read_field(path)
        if values.shape[-1] != 1:
            raise ValueError(f"{path}: expected 1 component, found {values.shape[-1]}")
        return cls(grid, values[..., 0])


def _gradient(values: np.ndarray, grid: Grid2) -> tuple[np.ndarray, np.ndarray]:
    ddx, ddy = np.gradient(values, grid.hx, grid.hy, axis=(0, 1), edge_order=2)
    return ddx, ddy


def differential_field(f: MapField) -> np.ndarray:
    """``d phi`` at every node, shape ``(nx, ny, 2, 2)``; column j is d phi / dx_j."""
    ddx, ddy = _gradient(f.values, f.grid)
    return np.stack([ddx, ddy], axis=-1)


def differential(f: MapField, node: tuple[int, int]) -> np.ndarray:
    i, j = node
    if not (0 <= i < f.grid.nx and 0 <= j < f.grid.ny):
        raise IndexError(f"node {node} outside {f.grid.nx}x{f.grid.ny} grid")
    return differential_field(f)[i, j]


def _det(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def jacobian_det(f: MapField) -> ScalarField:
    return ScalarField(f.grid, _det(differential_field(f)))


def jacobian_det_ga(f: MapField) -> ScalarField:
    """Jacobian determinant as the ``J`` coefficient of ``phi_x ^ phi_y``."""
    d = differential_field(f)
    phi_x = ga2.vector(d[..., 0, 0], d[..., 1, 0])
    phi_y = ga2.vector(d[..., 0, 1], d[..., 1, 1])
    return ScalarField(f.grid, ga2.outer(phi_x, phi_y).b)


def curl(f: MapField) -> ScalarField:
    """Planar curl ``d phi^2/dx - d phi^1/dy`` (the divergence of ``J phi``)."""
    d = differential_field(f)
    return ScalarField(f.grid, d[..., 1, 0] - d[..., 0, 1])


def curl_via_dual(f: MapField) -> ScalarField:
    """Trace of ``d(J phi)``; identical in floating point to :func:`curl`."""
    d = differential_field(dual_map(f))
    return ScalarField(f.grid, d[..., 0, 0] + d[..., 1, 1])


def dual_map(f: MapField) -> MapField:
    return MapField(f.grid, ga2.j_rotate(f.values))


def min_abs_det(f: MapField) -> float:
    return float(np.min(np.abs(jacobian_det(f).values)))


def is_immersion(f: MapField, threshold: float = IMMERSION_THRESHOLD) -> bool:
    return min_abs_det(f) >= threshold


def require_immersion(f: MapField, threshold: float = IMMERSION_THRESHOLD) -> None:
    det = np.abs(jacobian_det(f).values)
    if det.min() < threshold:
        bad = np.argwhere(det < threshold)
        raise NotAnImmersion(
            f"|det d phi| < {threshold:g} at {len(bad)} node(s), first at {tuple(bad[0])}"
        )


def derivative_matrix(n: int, h: float) -> sp.csr_matrix:
    """1D first-derivative matrix with the same stencils as :func:`differential_field`."""
    if n < 3:
        raise ValueError("derivative stencils need at least 3 nodes")
    rows, cols, vals = [], [], []
    for r, c, v in ((0, 0, -1.5), (0, 1, 2.0), (0, 2, -0.5),
                    (n - 1, n - 3, 0.5), (n - 1, n - 2, -2.0), (n - 1, n - 1, 1.5)):
        rows.append(r), cols.append(c), vals.append(v / h)
    for r in range(1, n - 1):
        rows += [r, r]
        cols += [r - 1, r + 1]
        vals += [-0.5 / h, 0.5 / h]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def write_field(path, grid: Grid2, values: np.ndarray) -> None:
    """Write node values in the ``planimm field v1`` text format."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[..., None]
    if values.shape[:2] != grid.shape:
        raise ValueError("values do not match grid")
    ncomp = values.shape[2]
    lines = [f"{FIELD_MAGIC} {grid.header()} {ncomp}"]
    for j in range(grid.ny):
        for i in range(grid.nx):
            lines.append(f"{i} {j} " + " ".join(f"{v:.17g}" for v in values[i, j]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field(path) -> tuple[Grid2, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith(FIELD_MAGIC):
        raise ValueError(f"{path}: not a planimm field v1 file")
    head = text[0][len(FIELD_MAGIC):].split()
    if len(head) != 7:
        raise ValueError(f"{path}: malformed header")
    nx, ny = int(head[0]), int(head[1])
    x0, y0, x1, y1 = map(float, head[2:6])
    ncomp = int(head[6])
    grid = Grid2(nx, ny, x0, y0, x1, y1)
    values = np.full((nx, ny, ncomp), np.nan)
    body = [ln for ln in text[1:] if ln.strip()]
    if len(body) != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} node lines, found {len(body)}")
    for ln in body:
        parts = ln.split()
        if len(parts) != 2 + ncomp:
            raise ValueError(f"{path}: bad node line {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        values[i, j] = [float(p) for p in parts[2:]]
    if np.isnan(values).any():
        raise ValueError(f"{path}: missing nodes")
    return grid, values

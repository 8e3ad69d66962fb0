"""Dirichlet data on the four edges of a rectangular grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from planimm.field import Grid2, MapField

__all__ = ["BoundaryData", "EDGES"]

EDGES = ("bottom", "right", "top", "left")
CORNER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Values of a map on the boundary nodes, one array per edge.

    ``bottom``/``top`` have shape ``(nx, 2)`` ordered by increasing x;
    ``left``/``right`` have shape ``(ny, 2)`` ordered by increasing y.
    Between nodes the data is interpolated by a cubic spline along each edge.
    """

    grid: Grid2
    bottom: np.ndarray
    right: np.ndarray
    top: np.ndarray
    left: np.ndarray

    def __post_init__(self):
        g = self.grid
        for name, n in zip(EDGES, (g.nx, g.ny, g.nx, g.ny)):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n, 2):
                raise ValueError(f"{name} edge must have shape {(n, 2)}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} edge has non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        corners = [
            (self.bottom[0], self.left[0]),
            (self.bottom[-1], self.right[0]),
            (self.top[0], self.left[-1]),
            (self.top[-1], self.right[-1]),
        ]
        for a, b in corners:
            if np.abs(a - b).max() > CORNER_TOL:
                raise ValueError("boundary edges disagree at a corner")
        splines = {
            "bottom": CubicSpline(g.x, self.bottom),
            "top": CubicSpline(g.x, self.top),
            "left": CubicSpline(g.y, self.left),
            "right": CubicSpline(g.y, self.right),
        }
        object.__setattr__(self, "_splines", splines)

    @classmethod
    def from_field(cls, f: MapField) -> BoundaryData:
        v = f.values
        return cls(f.grid, v[:, 0].copy(), v[-1, :].copy(), v[:, -1].copy(), v[0, :].copy())

    @classmethod
    def from_function(cls, grid: Grid2, fn) -> BoundaryData:
        X, Y = grid.mesh()
        u, v = fn(X, Y)
        return cls.from_field(MapField(grid, np.stack(np.broadcast_arrays(u, v), -1)))

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Copy of ``values`` (``(nx, ny, 2)``) with the boundary nodes overwritten."""
        out = np.array(values, dtype=float)
        out[:, 0] = self.bottom
        out[:, -1] = self.top
        out[0, :] = self.left
        out[-1, :] = self.right
        return out

    def mismatch(self, f: MapField) -> float:
        """Largest deviation of ``f`` from this data on boundary nodes."""
        other = BoundaryData.from_field(f)
        return max(float(np.abs(getattr(self, e) - getattr(other, e)).max()) for e in EDGES)

    def blend(self) -> MapField:
        """Transfinite (Coons) interpolation of the edges into the interior."""
        g = self.grid
        s = (g.x - g.x0) / (g.x1 - g.x0)
        t = (g.y - g.y0) / (g.y1 - g.y0)
        S, T = s[:, None, None], t[None, :, None]
        B, Tp = self.bottom[:, None, :], self.top[:, None, :]
        L, R = self.left[None, :, :], self.right[None, :, :]
        corners = ((1 - S) * (1 - T) * self.bottom[0] + S * (1 - T) * self.bottom[-1]
                   + (1 - S) * T * self.top[0] + S * T * self.top[-1])
        values = (1 - T) * B + T * Tp + (1 - S) * L + S * R - corners
        return MapField(g, self.apply(values))

    def edge_of(self, x, y) -> np.ndarray:
        """Index into ``EDGES`` of the edge nearest to each point."""
        g = self.grid
        dist = np.stack([np.abs(y - g.y0), np.abs(x - g.x1), np.abs(y - g.y1), np.abs(x - g.x0)])
        return np.argmin(dist, axis=0)

    def evaluate(self, x, y) -> np.ndarray:
        """Interpolated boundary values at points on (or snapped to) the boundary."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        x, y = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        edge = self.edge_of(x, y)
        out = np.empty((x.size, 2))
        for k, name in enumerate(EDGES):
            sel = edge == k
            if sel.any():
                along = x[sel] if name in ("bottom", "top") else y[sel]
                out[sel] = self._splines[name](along)
        return out.reshape(*shape, 2)

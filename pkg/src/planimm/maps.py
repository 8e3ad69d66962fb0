"""Closed-form test maps with analytic values and derivatives.

Each map carries its own exact differential so every discrete operator in
the package has an oracle to be checked against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "AnalyticMap", "MAPS", "get_map", "parse_map_spec", "known_maps",
    "identity", "rotation", "scale", "shear", "sinusoidal",
]


@dataclass(frozen=True)
class AnalyticMap:
    name: str
    params: dict
    value: Callable  # (x, y) -> (u, v)
    jacobian: Callable  # (x, y) -> (du/dx, du/dy, dv/dx, dv/dy)
    affine: bool = False

    def __call__(self, x, y):
        return self.value(x, y)

    def sample(self, grid):
        """Sample onto a grid as a ``MapField``."""
        from planimm.field import MapField

        X, Y = grid.mesh()
        u, v = self.value(X, Y)
        return MapField(grid, np.stack(np.broadcast_arrays(u, v), axis=-1))

    def differential(self, x, y) -> np.ndarray:
        """Exact differential, shape ``(..., 2, 2)``; column j is d/dx_j."""
        a, b, c, d = np.broadcast_arrays(*self.jacobian(x, y))
        return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)

    def jac(self, x, y):
        a, b, c, d = self.jacobian(x, y)
        return a * d - b * c

    def curl(self, x, y):
        a, b, c, d = self.jacobian(x, y)
        return c - b + 0.0 * x

    def label(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(f"{k}={v:g}" for k, v in self.params.items())


def identity() -> AnalyticMap:
    return AnalyticMap(
        "identity", {},
        lambda x, y: (x + 0.0 * y, y + 0.0 * x),
        lambda x, y: (1.0, 0.0, 0.0, 1.0),
        affine=True,
    )


def rotation(theta: float = 0.5) -> AnalyticMap:
    c, s = np.cos(theta), np.sin(theta)
    return AnalyticMap(
        "rotation", {"theta": float(theta)},
        lambda x, y: (c * x - s * y, s * x + c * y),
        lambda x, y: (c, -s, s, c),
        affine=True,
    )


def scale(a: float = 2.0, b: float = 3.0) -> AnalyticMap:
    return AnalyticMap(
        "scale", {"a": float(a), "b": float(b)},
        lambda x, y: (a * x + 0.0 * y, b * y + 0.0 * x),
        lambda x, y: (a, 0.0, 0.0, b),
        affine=True,
    )


def shear(k: float = 0.5) -> AnalyticMap:
    return AnalyticMap(
        "shear", {"k": float(k)},
        lambda x, y: (x + k * y, y + 0.0 * x),
        lambda x, y: (1.0, k, 0.0, 1.0),
        affine=True,
    )


def sinusoidal(amplitude: float = 0.05) -> AnalyticMap:
    """``(x + A sin(pi x) sin(pi y), y)``; equals the identity on the unit square's edges."""
    A = float(amplitude)
    pi = np.pi

    def value(x, y):
        return x + A * np.sin(pi * x) * np.sin(pi * y), y + 0.0 * x

    def jacobian(x, y):
        return (
            1.0 + A * pi * np.cos(pi * x) * np.sin(pi * y),
            A * pi * np.sin(pi * x) * np.cos(pi * y),
            0.0,
            1.0,
        )

    return AnalyticMap("sinusoidal", {"amplitude": A}, value, jacobian)


MAPS: dict[str, Callable[..., AnalyticMap]] = {
    "identity": identity,
    "rotation": rotation,
    "scale": scale,
    "shear": shear,
    "sinusoidal": sinusoidal,
}


def known_maps() -> list[str]:
    return sorted(MAPS)


def get_map(name: str, **params) -> AnalyticMap:
    try:
        factory = MAPS[name]
    except KeyError:
        raise ValueError(f"unknown map {name!r}; known maps: {', '.join(known_maps())}") from None
    return factory(**params)


def parse_map_spec(spec: str) -> AnalyticMap:
    """Parse ``name`` or ``name:key=value,key=value``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"bad map parameter {item!r} (expected key=value)")
        params[key.strip()] = float(val)
    try:
        return get_map(name.strip(), **params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for map {name!r}: {exc}") from None

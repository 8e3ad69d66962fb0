"""Geometric algebra of the Euclidean plane, Cl(2,0).

A multivector is stored by its coefficients on the fixed basis
``{1, e1, e2, e1e2}``.  Coefficients may be floats or numpy arrays of a
common shape, in which case every operation acts elementwise; this is how
the field code evaluates algebraic identities over a whole grid at once.

The unit pseudoscalar ``J = e1e2`` squares to -1 and, multiplied from the
left onto a vector, rotates it clockwise by a right angle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

__all__ = [
    "Multivector2",
    "ONE",
    "E1",
    "E2",
    "J",
    "mv_product",
    "grade_project",
    "j_rotate",
    "vector",
    "inner",
    "outer",
]


@dataclass(frozen=True)
class Multivector2:
    """``s + v1 e1 + v2 e2 + b J`` with real (or array) coefficients."""

    s: Any = 0.0
    v1: Any = 0.0
    v2: Any = 0.0
    b: Any = 0.0

    def __add__(self, other: Multivector2) -> Multivector2:
        other = _coerce(other)
        return Multivector2(self.s + other.s, self.v1 + other.v1,
                            self.v2 + other.v2, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other: Multivector2) -> Multivector2:
        return self + (-_coerce(other))

    def __rsub__(self, other) -> Multivector2:
        return _coerce(other) - self

    def __neg__(self) -> Multivector2:
        return Multivector2(-self.s, -self.v1, -self.v2, -self.b)

    def __mul__(self, other) -> Multivector2:
        return mv_product(self, _coerce(other))

    def __rmul__(self, other) -> Multivector2:
        return mv_product(_coerce(other), self)

    def __getitem__(self, k: int) -> Multivector2:
        return grade_project(self, k)

    def components(self) -> np.ndarray:
        """Coefficients stacked along a leading axis of length 4."""
        return np.stack(np.broadcast_arrays(*map(np.asarray, (self.s, self.v1, self.v2, self.b))))

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.components())))

    def allclose(self, other: Multivector2, atol: float = 1e-12) -> bool:
        diff = self.components() - _coerce(other).components()
        return bool(np.all(np.abs(diff) <= atol))


def _coerce(x) -> Multivector2:
    if isinstance(x, Multivector2):
        return x
    return Multivector2(s=x)


ONE = Multivector2(1.0, 0.0, 0.0, 0.0)
E1 = Multivector2(0.0, 1.0, 0.0, 0.0)
E2 = Multivector2(0.0, 0.0, 1.0, 0.0)
J = Multivector2(0.0, 0.0, 0.0, 1.0)


def vector(x, y) -> Multivector2:
    """The grade-1 multivector ``x e1 + y e2``."""
    return Multivector2(0.0, x, y, 0.0)


def mv_product(a: Multivector2, b: Multivector2) -> Multivector2:
    """Geometric product ``ab``.

    Basis table (row times column)::

              1     e1    e2    J
        1  |  1     e1    e2    J
        e1 |  e1    1     J     e2
        e2 |  e2   -J     1    -e1
        J  |  J    -e2    e1   -1
    """
    s = a.s * b.s + a.v1 * b.v1 + a.v2 * b.v2 - a.b * b.b
    v1 = a.s * b.v1 + a.v1 * b.s - a.v2 * b.b + a.b * b.v2
    v2 = a.s * b.v2 + a.v2 * b.s + a.v1 * b.b - a.b * b.v1
    bb = a.s * b.b + a.b * b.s + a.v1 * b.v2 - a.v2 * b.v1
    return Multivector2(s, v1, v2, bb)


def grade_project(a: Multivector2, k: int) -> Multivector2:
    """The grade-``k`` part of ``a``; zero for ``k`` outside {0, 1, 2}."""
    zero = 0.0 * a.s
    if k == 0:
        return Multivector2(a.s, zero, zero, zero)
    if k == 1:
        return Multivector2(zero, a.v1, a.v2, zero)
    if k == 2:
        return Multivector2(zero, zero, zero, a.b)
    return Multivector2(zero, zero, zero, zero)


def inner(v: Multivector2, w: Multivector2) -> Multivector2:
    """Symmetric part of the product of two vectors, a scalar."""
    return grade_project(mv_product(v, w), 0)


def outer(v: Multivector2, w: Multivector2) -> Multivector2:
    """Antisymmetric part of the product of two vectors, a bivector."""
    return grade_project(mv_product(v, w), 2)


def j_rotate(v):
    """Left multiplication by ``J`` on a plane vector: ``(x, y) -> (y, -x)``.

    Accepts a ``Multivector2`` (only its vector part is used) or an array
    whose last axis has length 2.
    """
    if isinstance(v, Multivector2):
        return Multivector2(0.0 * v.s, v.v2, -v.v1, 0.0 * v.s)
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] != 2:
        raise ValueError(f"expected a trailing axis of length 2, got shape {v.shape}")
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)

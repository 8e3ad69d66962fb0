"""Geodesic shooting in a sampled metric and reconstruction of a map from it.

For a metric induced by an immersion ``phi``, each geodesic is carried by
``phi`` onto a straight segment traversed at constant speed.  A point is
therefore recovered from the two boundary exits of the geodesic through it
together with the metric arc lengths to each exit.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from planimm.boundary import BoundaryData
from planimm.field import Grid2, MapField, _gradient
from planimm.metric import MetricField

__all__ = [
    "BoundaryData",
    "GeodesicTrace",
    "GeodesicFailure",
    "christoffel",
    "christoffel_field",
    "MetricInterpolant",
    "shoot",
    "shoot_batch",
    "reconstruct_point",
    "reconstruct_map",
    "ReconstructionReport",
]

# Christoffel components kept by the interpolant, as (k, i, j) with i <= j.
_GAMMA_KEYS = ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 0, 1), (1, 1, 1))


# no nnan/ninf: the integrator relies on isfinite checks
_FASTMATH = {"contract", "arcp", "nsz", "reassoc"}


class GeodesicFailure(RuntimeError):
    pass


def christoffel_field(g: MetricField) -> np.ndarray:
    """Levi-Civita symbols ``Gamma[..., k, i, j]`` at every node."""
    G = g.tensors()
    det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] ** 2
    if np.any(det <= 0):
        raise GeodesicFailure("metric is not invertible at some node")
    ddx, ddy = _gradient(G, g.grid)
    dG = np.stack([ddx, ddy], axis=-3)  # [..., l, i, j] = d_l g_ij
    Ginv = np.linalg.inv(G)
    # first kind: Gamma_{l, ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    first = 0.5 * (np.einsum("...ijl->...lij", dG) + np.einsum("...jil->...lij", dG) - dG)
    return np.einsum("...kl,...lij->...kij", Ginv, first)


def christoffel(g: MetricField, node: tuple[int, int]) -> np.ndarray:
    i, j = node
    return christoffel_field(g)[i, j]


class MetricInterpolant:
    """Metric and Christoffel symbols at arbitrary points of the rectangle.

    ``method="bilinear"`` (the default) interpolates nodal values cell by
    cell; ``"bicubic"`` uses cubic convolution on the surrounding 4x4 nodes
    with linearly extrapolated ghost nodes at the edges.  Points slightly
    outside the rectangle are extrapolated from the nearest cell.
    """

    def __init__(self, g: MetricField, method: str = "bilinear"):
        if method not in ("bilinear", "bicubic"):
            raise ValueError(f"unknown interpolation {method!r}")
        self.grid = g.grid
        self.method = method
        gamma = christoffel_field(g)
        comps = [g.values[..., c] for c in range(3)]
        comps += [gamma[..., k, i, j] for k, i, j in _GAMMA_KEYS]
        self.table = np.ascontiguousarray(np.stack(comps, -1))
        self.params = np.array([g.grid.x0, g.grid.y0, g.grid.hx, g.grid.hy,
                                g.grid.x1, g.grid.y1, 1.0 / g.grid.hx, 1.0 / g.grid.hy])
        self.cubic = method == "bicubic"

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Interpolated ``(g11, g12, g22, G000, G001, G011, G100, G101, G111)``, shape ``(N, 9)``."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty((len(pts), 9))
        _interp_many(self.table, self.params, self.cubic, pts, out)
        return out

    def metric(self, pts: np.ndarray) -> np.ndarray:
        return self(pts)[:, :3]

    def speed2(self, pts: np.ndarray, vel: np.ndarray) -> np.ndarray:
        c = self(pts)
        vx, vy = vel[:, 0], vel[:, 1]
        return c[:, 0] * vx * vx + 2 * c[:, 1] * vx * vy + c[:, 2] * vy * vy


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _keys(t, w):
    # cubic convolution weights (a = -1/2) for offsets -1, 0, 1, 2
    t2 = t * t
    t3 = t2 * t
    w[0] = -0.5 * t3 + t2 - 0.5 * t
    w[1] = 1.5 * t3 - 2.5 * t2 + 1.0
    w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t
    w[3] = 0.5 * t3 - 0.5 * t2


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _row(table, i, j, c):
    # value at (i, j) for in-range i, with linear ghost extrapolation in j
    ny = table.shape[1]
    if j < 0:
        return 2.0 * table[i, 0, c] - table[i, 1, c]
    if j > ny - 1:
        return 2.0 * table[i, ny - 1, c] - table[i, ny - 2, c]
    return table[i, j, c]


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _node(table, i, j, c):
    nx = table.shape[0]
    if i < 0:
        return 2.0 * _row(table, 0, j, c) - _row(table, 1, j, c)
    if i > nx - 1:
        return 2.0 * _row(table, nx - 1, j, c) - _row(table, nx - 2, j, c)
    return _row(table, i, j, c)


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _bilinear(table, prm, px, py, out):
    nx, ny, nc = table.shape
    # int() truncates toward zero; after clamping this equals floor + clamp
    fx = (px - prm[0]) * prm[6]
    fy = (py - prm[1]) * prm[7]
    i = min(max(int(fx), 0), nx - 2)
    j = min(max(int(fy), 0), ny - 2)
    tx = fx - i
    ty = fy - j
    w00 = (1.0 - tx) * (1.0 - ty)
    w01 = (1.0 - tx) * ty
    w10 = tx * (1.0 - ty)
    w11 = tx * ty
    for c in range(nc):
        out[c] = (w00 * table[i, j, c] + w01 * table[i, j + 1, c]
                  + w10 * table[i + 1, j, c] + w11 * table[i + 1, j + 1, c])


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _bicubic(table, prm, px, py, out):
    nx, ny, nc = table.shape
    fx = (px - prm[0]) * prm[6]
    fy = (py - prm[1]) * prm[7]
    i = min(max(int(fx), 0), nx - 2)
    j = min(max(int(fy), 0), ny - 2)
    wx = np.empty(4)
    wy = np.empty(4)
    _keys(fx - i, wx)
    _keys(fy - j, wy)
    for c in range(nc):
        acc = 0.0
        for a in range(4):
            row = 0.0
            for b in range(4):
                row += wy[b] * _node(table, i - 1 + a, j - 1 + b, c)
            acc += wx[a] * row
        out[c] = acc


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _interp(table, prm, cubic, px, py, out):
    if cubic:
        _bicubic(table, prm, px, py, out)
    else:
        _bilinear(table, prm, px, py, out)


@njit(cache=True, fastmath=_FASTMATH)
def _interp_many(table, prm, cubic, pts, out):
    buf = np.empty(table.shape[2])
    for n in range(pts.shape[0]):
        _interp(table, prm, cubic, pts[n, 0], pts[n, 1], buf)
        out[n, :] = buf


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _rhs(table, prm, cubic, y, dy, c):
    """State ``(x, y, vx, vy, s)``; ``s`` accumulates metric arc length."""
    _interp(table, prm, cubic, y[0], y[1], c)
    vx = y[2]
    vy = y[3]
    dy[0] = vx
    dy[1] = vy
    dy[2] = -(c[3] * vx * vx + 2.0 * c[4] * vx * vy + c[5] * vy * vy)
    dy[3] = -(c[6] * vx * vx + 2.0 * c[7] * vx * vy + c[8] * vy * vy)
    q = c[0] * vx * vx + 2.0 * c[1] * vx * vy + c[2] * vy * vy
    dy[4] = np.sqrt(q) if q > 0.0 else 0.0


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _rk4(table, prm, cubic, y, h, out, k1, k2, k3, k4, tmp, c):
    _rhs(table, prm, cubic, y, k1, c)
    for m in range(5):
        tmp[m] = y[m] + 0.5 * h * k1[m]
    _rhs(table, prm, cubic, tmp, k2, c)
    for m in range(5):
        tmp[m] = y[m] + 0.5 * h * k2[m]
    _rhs(table, prm, cubic, tmp, k3, c)
    for m in range(5):
        tmp[m] = y[m] + h * k3[m]
    _rhs(table, prm, cubic, tmp, k4, c)
    for m in range(5):
        out[m] = y[m] + h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _margin(prm, px, py):
    return min(px - prm[0], prm[4] - px, py - prm[1], prm[5] - py)


@njit(cache=True, fastmath=_FASTMATH, inline="always")
def _hermite(y, yn, k0, k1, h, theta, out):
    # cubic Hermite dense output of one step, theta in [0, 1]
    t2 = theta * theta
    t3 = t2 * theta
    a = 2.0 * t3 - 3.0 * t2 + 1.0
    b = t3 - 2.0 * t2 + theta
    c = -2.0 * t3 + 3.0 * t2
    d = t3 - t2
    for m in range(5):
        out[m] = a * y[m] + b * h * k0[m] + c * yn[m] + d * h * k1[m]


@njit(cache=True, fastmath=_FASTMATH)
def _locate_exit(table, prm, cubic, y, yn, k0, h, n_bisect, exit_state):
    """Exit point of the step ``y -> yn`` (slope ``k0`` at ``y``) that leaves the rectangle.

    The crossing is bracketed by bisection on the step's cubic Hermite
    interpolant to ``1e-12`` in the curve parameter and then placed on the
    crossed edge by linear interpolation across the bracket.
    """
    k1 = np.empty(5)
    c = np.empty(table.shape[2])
    _rhs(table, prm, cubic, yn, k1, c)
    trial = np.empty(5)
    lo = 0.0
    hi = 1.0
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        _hermite(y, yn, k0, k1, h, mid, trial)
        if _margin(prm, trial[0], trial[1]) >= 0.0:
            lo = mid
        else:
            hi = mid
    y_in = np.empty(5)
    y_out = np.empty(5)
    _hermite(y, yn, k0, k1, h, lo, y_in)
    _hermite(y, yn, k0, k1, h, hi, y_out)
    t = 1.0
    for ax in range(2):
        p0 = y_in[ax]
        p1 = y_out[ax]
        lo_b = prm[ax]
        hi_b = prm[4 + ax]
        if p1 < lo_b and p1 != p0:
            t = min(t, (lo_b - p0) / (p1 - p0))
        if p1 > hi_b and p1 != p0:
            t = min(t, (hi_b - p0) / (p1 - p0))
    t = min(max(t, 0.0), 1.0)
    for m in range(5):
        exit_state[m] = y_in[m] + t * (y_out[m] - y_in[m])
    exit_state[0] = min(max(exit_state[0], prm[0]), prm[4])
    exit_state[1] = min(max(exit_state[1], prm[1]), prm[5])


@njit(cache=True, fastmath=_FASTMATH)
def _integrate(table, prm, cubic, y0, h, max_steps, n_bisect, exit_state, path):
    """Advance one trajectory to the boundary.

    Returns ``(status, steps, max_speed_error, path_len)``; status 0 on a clean
    exit, 1 if the step ceiling was hit, 2 on a non-finite state.
    """
    y = y0.copy()
    yn = np.empty(5)
    k1 = np.empty(5)
    k2 = np.empty(5)
    k3 = np.empty(5)
    k4 = np.empty(5)
    tmp = np.empty(5)
    c = np.empty(table.shape[2])
    record = path.shape[0] > 0
    npath = 0
    if record:
        path[0, 0] = y[0]
        path[0, 1] = y[1]
        npath = 1
    err = 0.0
    steps = 0
    while steps < max_steps:
        _rk4(table, prm, cubic, y, h, yn, k1, k2, k3, k4, tmp, c)
        steps += 1
        for m in range(5):
            if not np.isfinite(yn[m]):
                return 2, steps, err, npath
        if _margin(prm, yn[0], yn[1]) < 0.0:
            _locate_exit(table, prm, cubic, y, yn, k1, h, n_bisect, exit_state)
            if record:
                path[npath, 0] = exit_state[0]
                path[npath, 1] = exit_state[1]
                npath += 1
            return 0, steps, err, npath
        # k1 of this step holds the metric speed at its start point
        err = max(err, abs(k1[4] * k1[4] - 1.0))
        for m in range(5):
            y[m] = yn[m]
        if record:
            path[npath, 0] = y[0]
            path[npath, 1] = y[1]
            npath += 1
    return 1, steps, err, npath


@njit(parallel=True, fastmath=_FASTMATH, cache=True)
def _integrate_many(table, prm, cubic, y0, h, max_steps, n_bisect, exits, status, steps, errs):
    empty = np.empty((0, 2))
    for n in prange(y0.shape[0]):
        st, ns, e, _ = _integrate(table, prm, cubic, y0[n], h, max_steps, n_bisect, exits[n], empty)
        status[n] = st
        steps[n] = ns
        errs[n] = e


@dataclass
class GeodesicTrace:
    points: np.ndarray
    exit_point: np.ndarray
    arc_length: float
    step_size: float
    steps: int
    max_speed_error: float


@dataclass
class _BatchResult:
    exit_points: np.ndarray
    arc_lengths: np.ndarray
    ok: np.ndarray
    steps: np.ndarray
    max_speed_error: np.ndarray
    status: np.ndarray


def _default_step(grid: Grid2) -> float:
    return min(grid.hx, grid.hy) / 4


def _max_steps(grid: Grid2) -> int:
    return 64 * (grid.nx + grid.ny)


def _initial_states(interp, x, v):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if np.any(np.all(v == 0, axis=1)):
        raise ValueError("shooting direction must be nonzero")
    if not np.all(interp.grid.contains(x[:, 0], x[:, 1], strict=True)):
        raise ValueError("shooting points must lie strictly inside the rectangle")
    speed = np.sqrt(interp.speed2(x, v))
    return np.ascontiguousarray(np.column_stack([x, v / speed[:, None], np.zeros(len(x))]))


def _n_bisect(h: float) -> int:
    # halvings of the unit step parameter until the bracket is below 1e-12 in curve parameter
    return max(1, int(np.ceil(np.log2(h / 1e-12))))


def shoot_batch(interp: MetricInterpolant, x: np.ndarray, v: np.ndarray,
                step: float | None = None, max_steps: int | None = None) -> _BatchResult:
    """Shoot unit-speed geodesics from points ``x`` in directions ``v`` until they leave the rectangle.

    Each trajectory is advanced with classical RK4 at a fixed step.  The
    step that crosses the boundary is bisected on its cubic Hermite
    interpolant until the bracket is below ``1e-12``, and the exit is placed
    on the crossed edge by linear interpolation within that bracket.  Trajectories are independent,
    so the result does not depend on how many threads run them.
    """
    grid = interp.grid
    h = _default_step(grid) if step is None else float(step)
    max_steps = _max_steps(grid) if max_steps is None else int(max_steps)
    y0 = _initial_states(interp, x, v)
    n = len(y0)
    exits = np.full((n, 5), np.nan)
    status = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    errs = np.zeros(n)
    _integrate_many(interp.table, interp.params, interp.cubic, y0, h, max_steps,
                    _n_bisect(h), exits, status, steps, errs)
    ok = status == 0
    exits[~ok] = np.nan
    return _BatchResult(exits[:, :2], exits[:, 4], ok, steps, errs, status)


def shoot(g: MetricField | MetricInterpolant, x, v, step: float | None = None,
          interpolation: str = "bilinear") -> GeodesicTrace:
    """Maximal unit-speed geodesic from interior point ``x`` with initial direction ``v``."""
    interp = g if isinstance(g, MetricInterpolant) else MetricInterpolant(g, interpolation)
    grid = interp.grid
    h = _default_step(grid) if step is None else float(step)
    max_steps = _max_steps(grid)
    y0 = _initial_states(interp, x, v)[0]
    exit_state = np.full(5, np.nan)
    path = np.empty((max_steps + 2, 2))
    status, steps, err, npath = _integrate(interp.table, interp.params, interp.cubic, y0, h,
                                           max_steps, _n_bisect(h), exit_state, path)
    if status == 1:
        raise GeodesicFailure(f"geodesic did not reach the boundary within {steps} steps")
    if status == 2:
        raise GeodesicFailure("geodesic state became non-finite")
    return GeodesicTrace(
        points=path[:npath].copy(),
        exit_point=exit_state[:2].copy(),
        arc_length=float(exit_state[4]),
        step_size=h,
        steps=int(steps),
        max_speed_error=float(err),
    )


def _chord_points(interp, b, x, v, step=None):
    """Both exits of the geodesic line through ``x`` along ``+-v``."""
    n = len(x)
    both = shoot_batch(interp, np.concatenate([x, x]), np.concatenate([v, -v]), step=step)
    fwd = _BatchResult(*(a[:n] for a in vars(both).values()))
    bwd = _BatchResult(*(a[n:] for a in vars(both).values()))
    ok = fwd.ok & bwd.ok
    phi_p = np.full((len(x), 2), np.nan)
    phi_q = np.full((len(x), 2), np.nan)
    if ok.any():
        phi_p[ok] = b.evaluate(fwd.exit_points[ok, 0], fwd.exit_points[ok, 1])
        phi_q[ok] = b.evaluate(bwd.exit_points[ok, 0], bwd.exit_points[ok, 1])
    s_p, s_q = fwd.arc_lengths, bwd.arc_lengths
    with np.errstate(invalid="ignore"):
        value = phi_p + (s_p / (s_p + s_q))[:, None] * (phi_q - phi_p)
        consistency = np.abs(np.linalg.norm(phi_q - phi_p, axis=1) - (s_p + s_q))
    return value, consistency, ok


def reconstruct_point(g: MetricField | MetricInterpolant, b: BoundaryData, x, v,
                      tol: float = 5e-3, interpolation: str = "bilinear") -> np.ndarray:
    """Value of the map at ``x`` from the boundary exits of the geodesic through ``x`` along ``v``.

    Raises :class:`GeodesicFailure` if a shot fails or the image chord length
    disagrees with the metric length by more than ``10 * tol``.
    """
    interp = g if isinstance(g, MetricInterpolant) else MetricInterpolant(g, interpolation)
    value, consistency, ok = _chord_points(interp, b, np.asarray(x, float)[None],
                                           np.asarray(v, float)[None])
    if not ok[0]:
        raise GeodesicFailure(f"geodesic through {tuple(x)} did not exit cleanly")
    if consistency[0] > 10 * tol:
        raise GeodesicFailure(
            f"chord length differs from metric length by {consistency[0]:.3e} at {tuple(x)}")
    return value[0]


@dataclass
class ReconstructionReport:
    grid: Grid2
    k: int
    spread: np.ndarray = field(repr=False)
    consistency: np.ndarray = field(repr=False)
    failures: list = field(default_factory=list)
    error: np.ndarray | None = field(default=None, repr=False)
    oracle: str | None = None

    @property
    def max_spread(self) -> float:
        return float(np.nanmax(self.spread))

    @property
    def mean_spread(self) -> float:
        return float(np.nanmean(self.spread[self._interior]))

    @property
    def max_error(self) -> float | None:
        return None if self.error is None else float(np.nanmax(self.error))

    @property
    def mean_error(self) -> float | None:
        return None if self.error is None else float(np.nanmean(self.error[self._interior]))

    @property
    def max_consistency(self) -> float:
        return float(np.nanmax(self.consistency))

    @property
    def _interior(self):
        return ~self.grid.boundary_mask()

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "k": self.k,
            "failures": self.failures,
            "max_spread": self.max_spread,
            "mean_spread": self.mean_spread,
            "max_consistency": self.max_consistency,
            "oracle": self.oracle,
            "max_error": self.max_error,
            "mean_error": self.mean_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def reconstruct_map(g: MetricField, b: BoundaryData, directions: int, oracle=None,
                    tol: float = 5e-3, interpolation: str = "bilinear",
                    step: float | None = None) -> tuple[MapField, ReconstructionReport]:
    """Reconstruct the map at every interior node from ``directions`` geodesic lines.

    Directions are equispaced in angle over a half turn, since each line
    is shot both ways.  Node values are the mean over successful directions;
    the report carries the per-node largest pairwise disagreement.
    ``oracle``, when given, is an ``AnalyticMap`` the result is compared with.
    """
    if directions < 2:
        raise ValueError("need at least two directions")
    if g.grid != b.grid:
        raise ValueError("metric and boundary data live on different grids")
    grid = g.grid
    interp = MetricInterpolant(g, interpolation)
    X, Y = grid.mesh()
    interior = ~grid.boundary_mask()
    pts = np.column_stack([X[interior], Y[interior]])
    n = len(pts)

    angles = np.pi * np.arange(directions) / directions
    failures = []
    nodes = np.argwhere(interior)
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    all_pts = np.tile(pts, (directions, 1))
    all_dirs = np.repeat(dirs, n, axis=0)
    val, cons, ok = _chord_points(interp, b, all_pts, all_dirs, step=step)
    bad = ~ok | (cons > 10 * tol)
    val[bad] = np.nan
    values = val.reshape(directions, n, 2)
    consistency = np.nanmax(np.where(ok, cons, np.nan).reshape(directions, n), axis=0)
    for flat in np.flatnonzero(bad):
        m, k = divmod(int(flat), n)
        reason = "shot failed" if not ok[flat] else "chord length inconsistent"
        failures.append({"node": [int(c) for c in nodes[k]], "direction": m, "reason": reason})

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(values, axis=0)
    spread = np.zeros(n)
    for a in range(directions):
        for c in range(a + 1, directions):
            dist = np.linalg.norm(values[a] - values[c], axis=1)
            spread = np.fmax(spread, dist)

    out = b.apply(np.zeros((*grid.shape, 2)))
    out[interior] = mean
    lost = ~np.isfinite(out).all(axis=-1)
    if lost.any():
        # nodes where every direction failed keep the blended boundary guess
        out[lost] = b.blend().values[lost]
    spread_full = np.zeros(grid.shape)
    spread_full[interior] = spread
    cons_full = np.zeros(grid.shape)
    cons_full[interior] = consistency

    error = None
    label = None
    if oracle is not None:
        exact = np.stack(np.broadcast_arrays(*oracle(X, Y)), -1)
        error = np.linalg.norm(out - exact, axis=-1)
        label = oracle.label()
    report = ReconstructionReport(grid, directions, spread_full, cons_full, failures, error, label)
    return MapField(grid, out), report

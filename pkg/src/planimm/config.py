"""JSON experiment configuration for the ``solve`` and ``uniqueness`` commands.

Example::

    {
      "grid": {"nx": 33, "ny": 33},
      "map": {"name": "sinusoidal", "params": {"amplitude": 0.05}},
      "n_starts": 10,
      "sigma": 0.1,
      "seed": 0,
      "distance_tol": 1e-6,
      "solver": {"max_iter": 200, "tol_residual": 1e-10},
      "init": "blend"
    }

``map`` may also be a string such as ``"rotation:theta=0.4"``. ``init`` picks the
starting guess for ``solve``: ``"blend"`` (Coons blend of the boundary data) or
``"identity"`` (identity interior with the prescribed boundary).

Unknown keys are rejected so a typo never silently falls back to a default.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from planimm.field import Grid2
from planimm.maps import AnalyticMap, get_map, parse_map_spec
from planimm.solver import SolverConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


INIT_CHOICES = ("blend", "identity")


class ConfigError(ValueError):
    pass


def _check_keys(section: str, data: dict, allowed) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object")
    extra = set(data) - set(allowed)
    if extra:
        raise ConfigError(f"{section}: unknown key(s) {sorted(extra)}; allowed {sorted(allowed)}")


@dataclass
class ExperimentConfig:
    grid: Grid2
    map_name: str
    map_params: dict = field(default_factory=dict)
    n_starts: int = 10
    sigma: float = 0.1
    seed: int = 0
    distance_tol: float = 1e-6
    min_converged: int = 2
    solver: SolverConfig = field(default_factory=SolverConfig)
    init: str = "blend"

    def analytic_map(self) -> AnalyticMap:
        return get_map(self.map_name, **self.map_params)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        top = {"grid", "map", "n_starts", "sigma", "seed", "distance_tol", "min_converged", "solver",
               "init"}
        _check_keys("config", data, top)
        for key in ("grid", "map"):
            if key not in data:
                raise ConfigError(f"config: missing required key {key!r}")
        g = data["grid"]
        _check_keys("grid", g, {"n", "nx", "ny", "x0", "y0", "x1", "y1"})
        if "n" in g and ("nx" in g or "ny" in g):
            raise ConfigError("grid: give either n or nx/ny")
        nx = g.get("nx", g.get("n"))
        ny = g.get("ny", g.get("n"))
        if not isinstance(nx, int) or not isinstance(ny, int):
            raise ConfigError("grid: node counts must be integers")
        try:
            grid = Grid2(nx, ny, float(g.get("x0", 0.0)), float(g.get("y0", 0.0)),
                         float(g.get("x1", 1.0)), float(g.get("y1", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None

        m = data["map"]
        if isinstance(m, str):
            try:
                parsed = parse_map_spec(m)
            except ValueError as exc:
                raise ConfigError(f"map: {exc}") from None
            m = {"name": parsed.name, "params": dict(parsed.params)}
        _check_keys("map", m, {"name", "params"})
        params = {k: float(v) for k, v in m.get("params", {}).items()}
        try:
            get_map(m["name"], **params)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"map: {exc}") from None

        s = data.get("solver", {})
        allowed = {f.name for f in fields(SolverConfig)}
        _check_keys("solver", s, allowed)
        try:
            solver = SolverConfig(**s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver: {exc}") from None

        cfg = cls(grid, m["name"], params, solver=solver)
        for key, typ in (("n_starts", int), ("seed", int), ("min_converged", int),
                         ("sigma", float), ("distance_tol", float)):
            if key in data:
                val = data[key]
                if typ is int and not isinstance(val, int):
                    raise ConfigError(f"{key}: expected an integer")
                setattr(cfg, key, typ(val))
        init = data.get("init", "blend")
        if init not in INIT_CHOICES:
            raise ConfigError(f"init: expected one of {INIT_CHOICES}, got {init!r}")
        cfg.init = init
        if cfg.n_starts < 2:
            raise ConfigError("n_starts must be at least 2")
        if cfg.sigma < 0:
            raise ConfigError("sigma must be non-negative")
        return cfg

    def to_dict(self) -> dict:
        """Normalized form; feeding it back through :meth:`from_dict` gives the same config."""
        return {
            "grid": self.grid.to_dict(),
            "map": {"name": self.map_name, "params": dict(self.map_params)},
            "n_starts": self.n_starts,
            "sigma": self.sigma,
            "seed": self.seed,
            "distance_tol": self.distance_tol,
            "min_converged": self.min_converged,
            "solver": asdict(self.solver),
            "init": self.init,
        }


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(data)

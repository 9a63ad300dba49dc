"""Scenario configuration files (JSON, strict keys)."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from ..core import POISSON_TOL, DriveMod, HOMod, LorentzBath, Modulator, ReservoirMod, TimeGrid, modulator_kind
from ..pipeline import SOLVERS, HeomOptions, applicable_solvers

DEFAULT_GRID = {"t_start": 0.0, "t_end": 2.0, "n_points": 401}

TOP_KEYS = {"alpha", "omega_c", "epsilon", "modulator", "solver", "grid", "rho_ee0", "tol", "heom", "out_dir"}
MOD_KEYS = {
    "ho": {"type", "omega0", "g0", "lambda"},
    "reservoir": {"type", "eta", "chi", "Lambda"},
    "drive": {"type", "amplitude", "frequency"},
}
GRID_KEYS = {"t_start", "t_end", "n_points"}
HEOM_KEYS = set(HeomOptions.__dataclass_fields__)


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the field or line."""


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    extra = sorted(set(data) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


def _number(data: dict, key: str, where: str, default=None) -> float:
    if key not in data:
        if default is None:
            raise ConfigError(f"{where}: missing field '{key}'")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class ScenarioConfig:
    bath: LorentzBath
    modulator: Modulator = None
    solver: str = "all"
    grid: TimeGrid = field(default_factory=lambda: TimeGrid(**DEFAULT_GRID))
    rho_ee0: float = 1.0
    tol: float = POISSON_TOL
    heom: HeomOptions = field(default_factory=HeomOptions)
    out_dir: str | None = None

    def __post_init__(self):
        if self.solver != "all" and self.solver not in SOLVERS:
            raise ConfigError(f"solver: must be 'all' or one of {SOLVERS}")
        if self.solver != "all" and self.solver not in applicable_solvers(self.modulator):
            raise ConfigError(f"solver: {self.solver!r} does not apply to modulator "
                              f"{modulator_kind(self.modulator)!r}")
        if not 0.0 <= self.rho_ee0 <= 1.0:
            raise ConfigError("rho_ee0 must lie in [0, 1]")
        if not 0.0 < self.tol < 1.0:
            raise ConfigError("tol must lie in (0, 1)")
        if self.solver in ("all", "heom") and "heom" in applicable_solvers(self.modulator) \
                and self.grid.t_start != 0:
            raise ConfigError("grid.t_start must be 0 when the heom solver runs")

    @property
    def solvers(self) -> tuple[str, ...]:
        return applicable_solvers(self.modulator) if self.solver == "all" else (self.solver,)

    def to_dict(self) -> dict[str, Any]:
        """Fully resolved configuration, every default spelled out."""
        return {
            "alpha": self.bath.alpha,
            "omega_c": self.bath.omega_c,
            "epsilon": self.bath.epsilon,
            "modulator": modulator_to_dict(self.modulator),
            "solver": self.solver,
            "grid": {"t_start": self.grid.t_start, "t_end": self.grid.t_end, "n_points": self.grid.n_points},
            "rho_ee0": self.rho_ee0,
            "tol": self.tol,
            "heom": asdict(self.heom),
            "out_dir": self.out_dir,
        }


def modulator_to_dict(mod: Modulator):
    if mod is None:
        return "none"
    if isinstance(mod, HOMod):
        return {"type": "ho", "omega0": mod.omega0, "g0": mod.g0, "lambda": mod.lam}
    if isinstance(mod, ReservoirMod):
        return {"type": "reservoir", "eta": mod.eta, "chi": mod.chi, "Lambda": mod.Lam}
    return {"type": "drive", "amplitude": mod.amplitude, "frequency": mod.frequency}


def _consistent(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def modulator_from_dict(raw) -> Modulator:
    if raw is None or raw == "none":
        return None
    if not isinstance(raw, dict) or "type" not in raw:
        raise ConfigError("modulator: expected 'none' or an object with a 'type' field")
    kind = raw["type"]
    if kind not in MOD_KEYS:
        raise ConfigError(f"modulator.type: unknown modulator {kind!r}")
    _reject_unknown(raw, MOD_KEYS[kind], "modulator")
    try:
        if kind == "ho":
            omega0 = _number(raw, "omega0", "modulator")
            if "lambda" in raw:
                mod = HOMod.from_lambda(_number(raw, "lambda", "modulator"), omega0)
                if "g0" in raw and not _consistent(mod.g0, _number(raw, "g0", "modulator")):
                    raise ConfigError("modulator: g0 and lambda disagree (g0 must equal omega0*sqrt(lambda))")
                return mod
            return HOMod(_number(raw, "g0", "modulator"), omega0)
        if kind == "reservoir":
            eta = _number(raw, "eta", "modulator")
            if "Lambda" in raw:
                mod = ReservoirMod.from_Lambda(_number(raw, "Lambda", "modulator"), eta)
                if "chi" in raw and not _consistent(mod.chi, _number(raw, "chi", "modulator")):
                    raise ConfigError("modulator: chi and Lambda disagree (chi must equal Lambda*eta)")
                return mod
            return ReservoirMod(_number(raw, "chi", "modulator"), eta)
        return DriveMod(_number(raw, "amplitude", "modulator"), _number(raw, "frequency", "modulator"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"modulator: {exc}") from None


def _heom_from_dict(raw) -> HeomOptions:
    if raw is None:
        return HeomOptions()
    if not isinstance(raw, dict):
        raise ConfigError("heom: expected an object")
    _reject_unknown(raw, HEOM_KEYS, "heom")
    for key in ("fock_dim", "ell_c", "ell_c_ceiling"):
        if key in raw and (isinstance(raw[key], bool) or not isinstance(raw[key], int)):
            raise ConfigError(f"heom.{key}: expected an integer")
    for key in ("auto_converge", "check_convergence"):
        if key in raw and not isinstance(raw[key], bool):
            raise ConfigError(f"heom.{key}: expected true or false")
    try:
        return HeomOptions(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    _reject_unknown(data, TOP_KEYS, "config")
    try:
        bath = LorentzBath(_number(data, "alpha", "config"), _number(data, "omega_c", "config"),
                           _number(data, "epsilon", "config"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    mod = modulator_from_dict(data.get("modulator", "none"))

    graw = data.get("grid", DEFAULT_GRID)
    if not isinstance(graw, dict):
        raise ConfigError("grid: expected an object")
    _reject_unknown(graw, GRID_KEYS, "grid")
    n_points = graw.get("n_points", DEFAULT_GRID["n_points"])
    if isinstance(n_points, bool) or not isinstance(n_points, int):
        raise ConfigError("grid.n_points: expected an integer")
    try:
        grid = TimeGrid(_number(graw, "t_start", "grid", DEFAULT_GRID["t_start"]),
                        _number(graw, "t_end", "grid", DEFAULT_GRID["t_end"]), n_points)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None

    solver = data.get("solver", "all")
    if not isinstance(solver, str):
        raise ConfigError("solver: expected a string")
    out_dir = data.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir: expected a string or null")
    return ScenarioConfig(
        bath=bath,
        modulator=mod,
        solver=solver,
        grid=grid,
        rho_ee0=_number(data, "rho_ee0", "config", 1.0),
        tol=_number(data, "tol", "config", POISSON_TOL),
        heom=_heom_from_dict(data.get("heom")),
        out_dir=out_dir,
    )


def parse_config(path) -> ScenarioConfig:
    """Read and validate a JSON scenario file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)

"""Scenario runs, figure presets and parameter sweeps."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from ..core import HOMod, LorentzBath, ReservoirMod, TimeGrid
from ..pipeline import HeomOptions, run_solver
from ..polaron_me import exp_approx_trace, relaxation_rate
from .config import ConfigError, ScenarioConfig, config_from_dict
from .records import Curve, RunRecord, write_outputs

WORKERS_ENV = "TLSDECAY_WORKERS"
OUT_ENV = "TLSDECAY_OUT"
ARBITER_TOL = 5e-3
KNOBS = ("lambda", "Lambda", "alpha")

FIG1 = {"alpha": 0.25, "omega_c": 7.5, "epsilon": 1.0, "omega0": 5.0,
        "lambdas": [0.0, 0.1, 1.0, 2.0, 3.0], "grid": (0.0, 2.0, 401)}
FIG2 = {"alphas": [0.1, 0.2, 0.3], "omega_c": 7.5, "epsilon": 1.0, "omega0": 5.0,
        "lambda_grid": (0.0, 3.0, 121)}
# the third preset varies the reservoir at cutoff eta = 3
FIG3 = {"alpha": 0.2, "omega_c": 5.0, "epsilon": 1.0, "eta": 3.0,
        "Lambdas": [0.0, 0.1, 1.0, 2.0, 3.0], "grid": (0.0, 2.0, 401)}
FIG4 = {"alpha": 0.01, "epsilon": 1.5, "omega_c": 0.2, "omega0": 1.0,
        "lambdas": [0.0, 0.1, 0.2, 0.3], "grid": (0.0, 50.0, 501),
        "heom": {"fock_dim": 10, "ell_c": 8, "auto_converge": True, "ell_c_ceiling": 30}}
PRESETS = ("fig1", "fig2", "fig3", "fig4")


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _map(fn, items, workers: int | None):
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _knob_of(cfg: ScenarioConfig) -> tuple[str, float]:
    mod = cfg.modulator
    if isinstance(mod, HOMod):
        return "lambda", mod.lam
    if isinstance(mod, ReservoirMod):
        return "Lambda", mod.Lam
    return "alpha", cfg.bath.alpha


def laplace_with_arbiter(bath, mod, rho_ee0, grid, tol):
    """Laplace trace cross-checked against Volterra; Volterra replaces it beyond 5e-3."""
    lap = run_solver("laplace", bath, mod, rho_ee0, grid, tol).trace
    vol = run_solver("volterra", bath, mod, rho_ee0, grid, tol).trace
    dev = float(np.max(np.abs(lap.values - vol.values)))
    chosen = lap if dev <= ARBITER_TOL else vol
    return chosen, {"laplace_volterra_max_dev": dev, "solver_used": chosen.solver}


def _point(args):
    cfg_dict, knob, value = args
    cfg = config_from_dict(cfg_dict)
    curves, diags = [], {}
    for solver in cfg.solvers:
        out = run_solver(solver, cfg.bath, cfg.modulator, cfg.rho_ee0, cfg.grid, cfg.tol, cfg.heom)
        curves.append(Curve.from_trace(out.trace, knob, value).to_dict())
        if out.diagnostics:
            diags[solver] = out.diagnostics
    return curves, diags


def simulate(cfg: ScenarioConfig) -> RunRecord:
    start = time.perf_counter()
    knob, value = _knob_of(cfg)
    curves, diags = _point((cfg.to_dict(), knob, value))
    return RunRecord(command="simulate", config=cfg.to_dict(),
                     curves=[Curve.from_dict(c) for c in curves],
                     diagnostics=diags, duration_s=time.perf_counter() - start)


def _with_knob(cfg: ScenarioConfig, knob: str, value: float) -> ScenarioConfig:
    if knob == "lambda":
        return replace(cfg, modulator=HOMod.from_lambda(value, cfg.modulator.omega0))
    if knob == "Lambda":
        return replace(cfg, modulator=ReservoirMod.from_Lambda(value, cfg.modulator.eta))
    return replace(cfg, bath=replace(cfg.bath, alpha=value))


def sweep(cfg: ScenarioConfig, knob: str, values, workers: int | None = None) -> RunRecord:
    """One run per knob value; points execute concurrently, output is ordered by value."""
    if knob not in KNOBS:
        raise ConfigError(f"unknown knob {knob!r}; expected one of {KNOBS}")
    values = sorted(float(v) for v in values)
    if not values:
        raise ConfigError("empty sweep")
    if knob == "lambda" and not isinstance(cfg.modulator, HOMod):
        raise ConfigError("knob requires single-mode modulator")
    if knob == "Lambda" and not isinstance(cfg.modulator, ReservoirMod):
        raise ConfigError("knob requires reservoir modulator")
    try:
        points = [(_with_knob(cfg, knob, v).to_dict(), knob, v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"sweep value rejected: {exc}") from None
    start = time.perf_counter()
    results = _map(_point, points, workers)
    curves, diags = [], {}
    for (_, _, v), (cs, ds) in zip(points, results):
        curves += [Curve.from_dict(c) for c in cs]
        if ds:
            diags[f"{knob}={v:g}"] = ds
    config = cfg.to_dict() | {"sweep": {"knob": knob, "values": values}}
    return RunRecord(command=f"sweep:{knob}", config=config, curves=curves,
                     diagnostics=diags, duration_s=time.perf_counter() - start)


def _fig1_point(args):
    lam, grid = args
    p = FIG1
    bath = LorentzBath(p["alpha"], p["omega_c"], p["epsilon"])
    mod = HOMod.from_lambda(lam, p["omega0"])
    trace, diag = laplace_with_arbiter(bath, mod, 1.0, grid, 1e-12)
    T1 = 1.0 / relaxation_rate(bath, lam, p["omega0"])
    approx = exp_approx_trace(T1, grid)
    return [Curve.from_trace(trace, "lambda", lam), Curve.from_trace(approx, "lambda", lam)], diag | {"T1": T1}


def _fig2_point(alpha):
    p = FIG2
    bath = LorentzBath(alpha, p["omega_c"], p["epsilon"])
    lams = np.linspace(*p["lambda_grid"])
    T1 = np.array([1.0 / relaxation_rate(bath, lam, p["omega0"]) for lam in lams])
    return [Curve("t1", "alpha", alpha, lams, T1, x_name="lambda", y_name="T1",
                  params={"alpha": alpha, "omega_c": p["omega_c"], "omega0": p["omega0"]})], \
        {"T1_at_lambda0": float(T1[0])}


def _fig3_point(args):
    Lam, grid = args
    p = FIG3
    bath = LorentzBath(p["alpha"], p["omega_c"], p["epsilon"])
    trace, diag = laplace_with_arbiter(bath, ReservoirMod.from_Lambda(Lam, p["eta"]), 1.0, grid, 1e-12)
    return [Curve.from_trace(trace, "Lambda", Lam)], diag


def _fig4_point(args):
    lam, grid, heom = args
    p = FIG4
    bath = LorentzBath(p["alpha"], p["omega_c"], p["epsilon"])
    out = run_solver("heom", bath, HOMod.from_lambda(lam, p["omega0"]), 1.0, grid, heom=heom)
    return [Curve.from_trace(out.trace, "lambda", lam)], out.diagnostics


def run_preset(name: str, out_dir=None, grid: TimeGrid | None = None, workers: int | None = None,
               heom: HeomOptions | None = None, write: bool = True) -> RunRecord:
    """Run one figure's full parameter sweep and write its CSVs and record.

    ``grid`` overrides the preset time grid (or the lambda grid for fig2 is
    left untouched); ``heom`` overrides the fig4 hierarchy options.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")
    start = time.perf_counter()
    if name == "fig1":
        g = grid or TimeGrid(*FIG1["grid"])
        knob, values = "lambda", FIG1["lambdas"]
        results = _map(_fig1_point, [(v, g) for v in values], workers)
        config = FIG1 | {"grid": [g.t_start, g.t_end, g.n_points], "solver": "laplace",
                         "arbiter": "volterra", "arbiter_tol": ARBITER_TOL, "rho_ee0": 1.0}
    elif name == "fig2":
        knob, values = "alpha", FIG2["alphas"]
        results = _map(_fig2_point, values, workers)
        config = dict(FIG2)
    elif name == "fig3":
        g = grid or TimeGrid(*FIG3["grid"])
        knob, values = "Lambda", FIG3["Lambdas"]
        results = _map(_fig3_point, [(v, g) for v in values], workers)
        config = FIG3 | {"grid": [g.t_start, g.t_end, g.n_points], "solver": "laplace",
                         "arbiter": "volterra", "arbiter_tol": ARBITER_TOL, "rho_ee0": 1.0}
    else:
        g = grid or TimeGrid(*FIG4["grid"])
        opts = heom or HeomOptions(omega0=FIG4["omega0"], **FIG4["heom"])
        knob, values = "lambda", FIG4["lambdas"]
        results = _map(_fig4_point, [(v, g, opts) for v in values], workers)
        dt = results[0][1]["dt"] if results else None
        config = FIG4 | {"grid": [g.t_start, g.t_end, g.n_points], "solver": "heom",
                         "heom": asdict(opts), "dt": dt, "rho_ee0": 1.0}

    curves, diags = [], {}
    for v, (cs, d) in zip(values, results):
        curves += cs
        diags[f"{knob}={v:g}"] = d
    record = RunRecord(command=f"preset:{name}", config=config, curves=curves,
                       diagnostics=diags, duration_s=time.perf_counter() - start)
    if write:
        write_outputs(record, out_dir if out_dir is not None else default_out_dir())
    return record

"""Dispatch a (bath, modulator) scenario to one of the solvers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import heom as _heom
from .core import (
    POISSON_TOL,
    DriveMod,
    HOMod,
    LorentzBath,
    Modulator,
    PopulationTrace,
    ReservoirMod,
    TimeGrid,
    modulator_kind,
)
from .generalizations import effective_alpha
from .laplace import kernel_bare, kernel_multimode, kernel_single_mode, population_trace_laplace
from .polaron_me import (
    closed_form_trace,
    expsum_bare,
    expsum_multimode,
    expsum_single_mode,
    volterra_solve,
)

SOLVERS = ("laplace", "volterra", "closed_form", "heom")


@dataclass(frozen=True)
class HeomOptions:
    fock_dim: int = 10
    ell_c: int = 8
    dt: float | None = None
    omega0: float = 1.0  # oscillator frequency when no modulator is configured
    convention: str = "standard"
    auto_converge: bool = False
    check_convergence: bool = False
    ell_c_ceiling: int = 30

    def __post_init__(self):
        if not (isinstance(self.fock_dim, int) and self.fock_dim >= 1):
            raise ValueError("heom.fock_dim must be an integer >= 1")
        if not (isinstance(self.ell_c, int) and self.ell_c >= 0):
            raise ValueError("heom.ell_c must be an integer >= 0")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("heom.dt must be positive")
        if not self.omega0 > 0:
            raise ValueError("heom.omega0 must be positive")
        if self.convention not in _heom.CONVENTIONS:
            raise ValueError(f"heom.convention must be one of {_heom.CONVENTIONS}")
        if not (isinstance(self.ell_c_ceiling, int) and self.ell_c_ceiling >= self.ell_c):
            raise ValueError("heom.ell_c_ceiling must be an integer >= heom.ell_c")


@dataclass
class SolverOutput:
    trace: PopulationTrace
    diagnostics: dict = field(default_factory=dict)


def is_unmodulated(mod: Modulator) -> bool:
    """True when the scenario reduces to the bare Lorentz kernel (drive only renormalizes alpha)."""
    if mod is None or isinstance(mod, DriveMod):
        return True
    if isinstance(mod, HOMod):
        return mod.lam == 0
    return mod.Lam == 0


def applicable_solvers(mod: Modulator) -> tuple[str, ...]:
    out = ["laplace", "volterra"]
    if is_unmodulated(mod):
        out.append("closed_form")
    if mod is None or isinstance(mod, HOMod):
        out.append("heom")
    return tuple(out)


def _frozen_trace(solver: str, rho_ee0: float, grid: TimeGrid, params: dict) -> PopulationTrace:
    values = np.full(grid.n_points, 2.0 * rho_ee0 - 1.0)
    return PopulationTrace(grid.times, values, solver, params | {"rho_ee0": rho_ee0})


def run_solver(solver: str, bath: LorentzBath, mod: Modulator, rho_ee0: float, grid: TimeGrid,
               tol: float = POISSON_TOL, heom: HeomOptions = HeomOptions()) -> SolverOutput:
    """Run one solver on a scenario.

    A periodic drive is handled by running the unmodulated path with the
    renormalized coupling, so the two are identical by construction.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    if solver not in applicable_solvers(mod):
        kind = modulator_kind(mod)
        raise ValueError(f"solver {solver!r} does not apply to modulator {kind!r}")

    if isinstance(mod, DriveMod):
        a_eff = effective_alpha(mod, bath.alpha)
        if a_eff <= 0.0:
            return SolverOutput(_frozen_trace(solver, rho_ee0, grid, {"alpha": 0.0}),
                                {"alpha_effective": 0.0})
        out = run_solver(solver, replace(bath, alpha=a_eff), None, rho_ee0, grid, tol, heom)
        out.diagnostics["alpha_effective"] = a_eff
        return out

    if solver == "laplace":
        if mod is None:
            kernel = kernel_bare(bath)
        elif isinstance(mod, HOMod):
            kernel = kernel_single_mode(bath, mod.lam, mod.omega0, tol)
        else:
            kernel = kernel_multimode(bath, mod.Lam, mod.eta, tol)
        return SolverOutput(population_trace_laplace(kernel, rho_ee0, grid))

    if solver == "volterra":
        if mod is None:
            kernel = expsum_bare(bath)
        elif isinstance(mod, HOMod):
            kernel = expsum_single_mode(bath, mod.lam, mod.omega0, tol)
        else:
            kernel = expsum_multimode(bath, mod.Lam, mod.eta, tol)
        trace = volterra_solve(kernel, rho_ee0, grid)
        return SolverOutput(trace, {"step": trace.params["step"],
                                    "step_halving_delta": trace.params["step_halving_delta"]})

    if solver == "closed_form":
        return SolverOutput(closed_form_trace(bath.alpha, bath.omega_c, grid, rho_ee0))

    return _run_heom(bath, mod, rho_ee0, grid, heom)


def heom_config_for(bath: LorentzBath, mod: Modulator, heom: HeomOptions) -> _heom.HeomConfig:
    omega0, g0 = (heom.omega0, 0.0) if mod is None else (mod.omega0, mod.g0)
    return _heom.HeomConfig(epsilon=bath.epsilon, omega0=omega0, g0=g0, alpha=bath.alpha,
                            omega_c=bath.omega_c, fock_dim=heom.fock_dim, ell_c=heom.ell_c,
                            dt=heom.dt, convention=heom.convention)


def _run_heom(bath, mod, rho_ee0, grid, heom: HeomOptions) -> SolverOutput:
    cfg = heom_config_for(bath, mod, heom)
    rho0 = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    rho0[0, 0] = rho_ee0
    rho0[cfg.fock_dim, cfg.fock_dim] = 1.0 - rho_ee0
    report = None
    if heom.auto_converge:
        result, report = _heom.auto_converge(cfg, rho0, grid, ceiling=heom.ell_c_ceiling)
    else:
        result = _heom.heom_evolve(cfg, rho0, grid)
        if heom.check_convergence:
            report = _heom.convergence_check(cfg, rho0, grid, base=result)
    diag = {
        "ell_c": result.config.ell_c,
        "fock_dim": result.config.fock_dim,
        "dt": result.trace.params["dt"],
        "omega0": cfg.omega0,
        "convention": cfg.convention,
        "max_trace_drift": result.max_trace_drift,
        "max_pairing_residual": result.max_pairing_residual,
    }
    if report is not None:
        diag["convergence"] = report.as_dict()
    trace = result.trace
    trace.params["rho_ee0"] = rho_ee0
    return SolverOutput(trace, diag)

"""Time-domain solution of the polaron master equation for rho_ee(t).

The memory kernel is a finite sum of decaying exponentials once the Poisson
series is truncated, so the convolution is rewritten exactly as a linear
ODE system with one auxiliary variable per exponential and integrated with
classical fourth-order Runge-Kutta.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    POISSON_TOL,
    LorentzBath,
    PopulationTrace,
    TimeGrid,
    poisson_weights,
)

STEP_HALVING_TOL = 1e-6


class StepTooCoarse(RuntimeError):
    """Halving the integration step moved some P(t) sample by more than the tolerance."""


@dataclass(frozen=True, eq=False)
class ExpSumKernel:
    """Memory kernel k(s) = sum_m weight_m exp(-rate_m s) + complex conjugate."""

    weights: np.ndarray
    rates: np.ndarray
    family: str = "bare"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        r = np.asarray(self.rates, dtype=complex)
        if w.shape != r.shape:
            raise ValueError("weights and rates must have equal length")
        if np.any(r.real <= 0):
            raise ValueError("all rates must have positive real part")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", r)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return 2.0 * np.sum(self.weights * np.exp(-np.multiply.outer(s, self.rates)).real, axis=-1)


def expsum_bare(bath: LorentzBath) -> ExpSumKernel:
    return ExpSumKernel(np.array([bath.alpha]), np.array([bath.omega_c + 0j]), "bare")


def expsum_single_mode(bath: LorentzBath, lam: float, omega0: float, tol: float = POISSON_TOL) -> ExpSumKernel:
    w = poisson_weights(lam, tol)
    l = np.arange(len(w))
    return ExpSumKernel(bath.alpha * w, bath.omega_c + 1j * l * omega0, "single_mode")


def expsum_multimode(bath: LorentzBath, Lam: float, eta: float, tol: float = POISSON_TOL) -> ExpSumKernel:
    w = poisson_weights(Lam, tol)
    l = np.arange(len(w))
    return ExpSumKernel(bath.alpha * w, (bath.omega_c + l * eta) + 0j, "multimode")


def _generator(kernel: ExpSumKernel) -> np.ndarray:
    # state x = [rho, Re y_1..Re y_m, Im y_1..Im y_m]; y_m' = rho - rate_m y_m
    m = len(kernel.weights)
    a, b = kernel.rates.real, kernel.rates.imag
    u = 1 + np.arange(m)
    v = 1 + m + np.arange(m)
    A = np.zeros((1 + 2 * m, 1 + 2 * m))
    A[0, u] = -2.0 * kernel.weights
    A[u, 0] = 1.0
    A[u, u] = -a
    A[u, v] = b
    A[v, u] = -b
    A[v, v] = -a
    return A


def _rk4_propagator(A: np.ndarray, h: float, n_sub: int) -> np.ndarray:
    hA = h * A
    step = np.eye(len(A))
    term = np.eye(len(A))
    for k in range(1, 5):
        term = term @ hA / k
        step = step + term
    return np.linalg.matrix_power(step, n_sub)


def default_step(kernel: ExpSumKernel, grid: TimeGrid) -> float:
    fastest = max(float(np.max(np.abs(kernel.rates))), 1.0)
    return min(grid.step, 0.01 / fastest)


def _integrate(kernel: ExpSumKernel, rho_ee0: float, grid: TimeGrid, h: float) -> np.ndarray:
    A = _generator(kernel)
    n_sub = max(1, math.ceil(grid.step / h - 1e-9))
    prop = _rk4_propagator(A, grid.step / n_sub, n_sub)
    x = np.zeros(len(A))
    x[0] = rho_ee0
    # the first grid point may sit at t_start > 0
    if grid.t_start > 0:
        n0 = max(1, math.ceil(grid.t_start / h - 1e-9))
        x = _rk4_propagator(A, grid.t_start / n0, n0) @ x
    rho = np.empty(grid.n_points)
    rho[0] = x[0]
    for i in range(1, grid.n_points):
        x = prop @ x
        rho[i] = x[0]
    return 2.0 * rho - 1.0


def volterra_solve(kernel: ExpSumKernel, rho_ee0: float, grid: TimeGrid,
                   step: float | None = None, check_step: bool = True) -> PopulationTrace:
    """Integrate rho_ee' = -int_0^t k(t - tau) rho_ee(tau) dtau on ``grid``.

    Parameters
    ----------
    kernel : ExpSumKernel
        Exponential-sum memory kernel.
    rho_ee0 : float
        Initial excited-state population.
    grid : TimeGrid
        Output grid; the integrator substeps to land on each point.
    step : float, optional
        RK4 step. Defaults to ``min(grid.step, 0.01 / max(|rate|, 1))``.
    check_step : bool
        Repeat the solve at half the step and raise :class:`StepTooCoarse`
        if any sample moves by more than 1e-6.

    Returns
    -------
    PopulationTrace
        P(t) = 2 rho_ee(t) - 1 tagged ``volterra``.
    """
    if not 0.0 <= rho_ee0 <= 1.0:
        raise ValueError("rho_ee0 must lie in [0, 1]")
    h = default_step(kernel, grid) if step is None else float(step)
    if not h > 0:
        raise ValueError("step must be positive")
    P = _integrate(kernel, rho_ee0, grid, h)
    delta = None
    if check_step:
        delta = float(np.max(np.abs(P - _integrate(kernel, rho_ee0, grid, h / 2))))
        if delta > STEP_HALVING_TOL:
            raise StepTooCoarse(f"step too coarse: halving h={h:g} changed P(t) by {delta:.3g}")
    params = {"family": kernel.family, "rho_ee0": rho_ee0, "step": h, "step_halving_delta": delta}
    return PopulationTrace(grid.times, P, "volterra", params)


def closed_form_P_lambda0(t, alpha: float, omega_c: float, rho_ee0: float = 1.0):
    """Exact P(t) for the unmodulated Lorentz kernel 2 alpha exp(-omega_c s).

    Evaluated in complex arithmetic so that omega_c**2 < 8 alpha (imaginary
    Theta, damped oscillations) needs no special branch.
    """
    if not (alpha > 0 and omega_c > 0):
        raise ValueError("alpha and omega_c must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    theta = cmath.sqrt(omega_c * omega_c - 8.0 * alpha)
    half = 0.5 * t_arr
    if theta == 0:
        bracket = 1.0 + omega_c * half + 0j
    else:
        bracket = np.cosh(theta * half) + (omega_c / theta) * np.sinh(theta * half)
    rho = rho_ee0 * np.exp(-omega_c * half) * bracket
    if np.max(np.abs(np.imag(rho))) >= 1e-12:
        raise ArithmeticError("closed form left an imaginary residue")
    P = 2.0 * np.real(rho) - 1.0
    return float(P) if P.ndim == 0 else P


def closed_form_trace(alpha: float, omega_c: float, grid: TimeGrid, rho_ee0: float = 1.0) -> PopulationTrace:
    P = closed_form_P_lambda0(grid.times, alpha, omega_c, rho_ee0)
    return PopulationTrace(grid.times, P, "closed_form",
                           {"alpha": alpha, "omega_c": omega_c, "rho_ee0": rho_ee0})


def _rate_series(bath: LorentzBath, lam: float, omega0: float, tol: float) -> float:
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    w = poisson_weights(lam, tol)
    l = np.arange(len(w))
    return float(np.sum(w / (l * l * omega0 * omega0 + bath.omega_c ** 2)))


def relaxation_rate(bath: LorentzBath, lam: float, omega0: float, tol: float = POISSON_TOL) -> float:
    """1/T1 = 2 pi sum_l w_l J(epsilon - l omega0) for the Lorentz bath."""
    return 2.0 * bath.alpha * bath.omega_c * _rate_series(bath, lam, omega0, tol)


def dephasing_rate(bath: LorentzBath, lam: float, omega0: float, tol: float = POISSON_TOL) -> float:
    """1/T2; the same series as :func:`relaxation_rate` with half the prefactor."""
    return bath.alpha * bath.omega_c * _rate_series(bath, lam, omega0, tol)


def exp_approx_trace(T1: float, grid: TimeGrid) -> PopulationTrace:
    if not T1 > 0:
        raise ValueError("T1 must be positive")
    t = grid.times
    return PopulationTrace(t, 2.0 * np.exp(-t / T1) - 1.0, "exp_approx", {"T1": T1})

"""Baths, modulators, time grids and the shared Poisson series machinery.

All frequencies are plain floats in one dimensionless unit system
(hbar = k_B = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

POISSON_TOL = 1e-12
POISSON_CAP = 512

SOLVER_TAGS = ("laplace", "volterra", "closed_form", "heom", "exp_approx")


class SeriesCapExceeded(ValueError):
    """Raised when a Poisson series would need more terms than the cap allows."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


def _finite(x: float) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)


@dataclass(frozen=True)
class LorentzBath:
    """Lorentzian environment peaked at the TLS frequency.

    Parameters
    ----------
    alpha : float
        Dimensionless coupling constant.
    omega_c : float
        Cutoff (half width) of the Lorentz peak.
    epsilon : float
        TLS transition frequency, also the peak centre.
    """

    alpha: float
    omega_c: float
    epsilon: float

    def __post_init__(self):
        _require(_finite(self.alpha) and self.alpha > 0, "alpha must be positive")
        _require(_finite(self.omega_c) and self.omega_c > 0, "omega_c must be positive")
        _require(_finite(self.epsilon) and self.epsilon > 0, "epsilon must be positive")


@dataclass(frozen=True)
class HOMod:
    """Single-mode ancillary oscillator with coupling g0 and frequency omega0."""

    g0: float
    omega0: float

    def __post_init__(self):
        _require(_finite(self.g0) and self.g0 >= 0, "g0 must be non-negative")
        _require(_finite(self.omega0) and self.omega0 > 0, "omega0 must be positive")

    @classmethod
    def from_lambda(cls, lam: float, omega0: float) -> "HOMod":
        _require(_finite(lam) and lam >= 0, "lambda must be non-negative")
        return cls(g0=omega0 * math.sqrt(lam), omega0=omega0)

    @property
    def lam(self) -> float:
        return (self.g0 / self.omega0) ** 2


@dataclass(frozen=True)
class ReservoirMod:
    """Multi-mode ancillary reservoir with super-Ohmic Lorentz-cutoff density."""

    chi: float
    eta: float

    def __post_init__(self):
        _require(_finite(self.chi) and self.chi >= 0, "chi must be non-negative")
        _require(_finite(self.eta) and self.eta > 0, "eta must be positive")

    @classmethod
    def from_Lambda(cls, Lam: float, eta: float) -> "ReservoirMod":
        _require(_finite(Lam) and Lam >= 0, "Lambda must be non-negative")
        return cls(chi=Lam * eta, eta=eta)

    @property
    def Lam(self) -> float:
        return self.chi / self.eta


@dataclass(frozen=True)
class DriveMod:
    """Periodic sigma_z drive A cos(Omega t)."""

    amplitude: float
    frequency: float

    def __post_init__(self):
        _require(_finite(self.amplitude) and self.amplitude >= 0, "amplitude must be non-negative")
        _require(_finite(self.frequency) and self.frequency > 0, "frequency must be positive")


Modulator = Optional[Union[HOMod, ReservoirMod, DriveMod]]


def modulator_kind(mod: Modulator) -> str:
    if mod is None:
        return "none"
    if isinstance(mod, HOMod):
        return "ho"
    if isinstance(mod, ReservoirMod):
        return "reservoir"
    if isinstance(mod, DriveMod):
        return "drive"
    raise TypeError(f"unknown modulator {mod!r}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_points`` samples on ``[t_start, t_end]``."""

    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        _require(_finite(self.t_start) and self.t_start >= 0, "t_start must be non-negative")
        _require(_finite(self.t_end) and self.t_end > self.t_start, "t_end must exceed t_start")
        _require(isinstance(self.n_points, (int, np.integer)) and self.n_points >= 2,
                 "n_points must be an integer >= 2")

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


@dataclass
class PopulationTrace:
    """Sampled population difference P(t) = 2 rho_ee(t) - 1."""

    times: np.ndarray
    values: np.ndarray
    solver: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.solver not in SOLVER_TAGS:
            raise ValueError(f"unknown solver tag {self.solver!r}")
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")

    def __len__(self) -> int:
        return len(self.times)


def spectral_density(bath: LorentzBath, omega):
    """Lorentz spectral density J(omega); accepts scalars or arrays, any sign of omega."""
    omega = np.asarray(omega, dtype=float)
    val = bath.alpha * bath.omega_c / (np.pi * ((omega - bath.epsilon) ** 2 + bath.omega_c ** 2))
    return float(val) if val.ndim == 0 else val


def poisson_weights(lam: float, tol: float = POISSON_TOL, cap: int = POISSON_CAP) -> np.ndarray:
    """Poisson weights ``w[l] = exp(-lam) lam**l / l!`` truncated once the tail mass drops below ``tol``.

    The weights are built by the recursion ``w[l+1] = w[l] * lam / (l + 1)``.
    Index ``l`` of the returned array is the Poisson order.

    Raises
    ------
    SeriesCapExceeded
        If more than ``cap`` orders would be needed.
    """
    _require(_finite(lam) and lam >= 0, "lam must be non-negative")
    _require(0 < tol < 1, "tol must lie in (0, 1)")
    if lam == 0:
        return np.array([1.0])
    w = math.exp(-lam)
    if w == 0.0:
        raise SeriesCapExceeded(f"series cap exceeded: exp(-{lam}) underflows")
    weights = [w]
    total = w
    l = 0
    while 1.0 - total >= tol:
        if l + 1 > cap:
            raise SeriesCapExceeded(f"series cap exceeded: lam={lam} needs more than {cap} terms")
        w = w * lam / (l + 1)
        l += 1
        weights.append(w)
        total += w
    return np.array(weights)

"""Drive-renormalized coupling and the multi-mode reservoir modulation function."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DriveMod, _finite

_SERIES_LIMIT = 12.0


@dataclass(frozen=True)
class ReservoirSpectral:
    """Super-Ohmic ancilla reservoir density chi e^2 / (pi (e^2 + eta^2))."""

    chi: float
    eta: float

    def __post_init__(self):
        if not (_finite(self.chi) and self.chi >= 0):
            raise ValueError("chi must be non-negative")
        if not (_finite(self.eta) and self.eta > 0):
            raise ValueError("eta must be positive")

    @property
    def Lam(self) -> float:
        return self.chi / self.eta


def _j0_series(x: float) -> float:
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= -q / (k * k)
        total += term
        if abs(term) < 1e-17 * max(1.0, abs(total)) and k > q:
            return total


def _j0_asymptotic(x: float) -> float:
    # Hankel expansion: a_k = a_{k-1} * (-(2k-1)^2) / (8k), alternating into P and Q
    p, q = 1.0, 0.0
    a = 1.0
    prev = math.inf
    for k in range(1, 200):
        a *= -((2 * k - 1) ** 2) / (8.0 * k)
        term = a / x ** k
        if abs(term) >= prev or abs(term) < 1e-17:
            break
        prev = abs(term)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q += sign * term
        else:
            p += sign * term
    phase = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(phase) - q * math.sin(phase))


def _j0_scalar(x: float) -> float:
    x = abs(float(x))
    if x <= _SERIES_LIMIT:
        return _j0_series(x)
    return _j0_asymptotic(x)


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Power series for ``|x| <= 12``, Hankel asymptotic expansion beyond.
    Accepts scalars or arrays.
    """
    if np.ndim(x) == 0:
        return _j0_scalar(x)
    return np.vectorize(_j0_scalar, otypes=[float])(x)


def effective_alpha(drive: DriveMod, alpha: float) -> float:
    """Coupling renormalized by a fast sigma_z drive: J0(A/Omega)**2 * alpha."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return bessel_j0(drive.amplitude / drive.frequency) ** 2 * alpha


def reservoir_spectral_density(spec: ReservoirSpectral, eps):
    eps = np.asarray(eps, dtype=float)
    val = spec.chi * eps * eps / (np.pi * (eps * eps + spec.eta * spec.eta))
    return float(val) if val.ndim == 0 else val


def modulation_G(t, Lam: float, eta: float):
    """Reservoir modulation function exp(Lam exp(-eta t) - Lam); complex-typed, real-valued."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    val = np.exp(Lam * np.exp(-eta * t) - Lam).astype(complex)
    return complex(val) if val.ndim == 0 else val

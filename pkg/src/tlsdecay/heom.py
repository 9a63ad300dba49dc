"""Hierarchical equations of motion for the TLS + oscillator, non-RWA bath coupling.

The bath correlation is the single exponential C(t) = alpha exp(-(wc + i eps) t),
which gives a two-index hierarchy rho_(l1, l2) with decay vector
(wc - i eps, wc + i eps). Auxiliary operators with l1 + l2 > ell_c are dropped.

Two sets of lower-tier coefficients are available:

``"standard"``
    Psi_p X = (i alpha / 2) [(-1)^(p+1) {sx, X} - [sx, X]], i.e. the index
    decaying at wc + i eps carries -i alpha sx X and its partner carries
    +i alpha X sx. Reproduces the golden-rule rate 2 alpha / wc at weak coupling.
``"quarter"``
    Psi_p X = (i alpha / 8) [(-1)^p {sx, X} - [sx, X]], kept for comparison.
    It pairs each index with the wrong side of sx and yields almost no decay;
    :func:`weak_coupling_deviation` flags it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .core import PopulationTrace, TimeGrid
from .polaron_me import closed_form_P_lambda0

CONVENTIONS = ("standard", "quarter")
DRIFT_TOL = 1e-6
CONVERGENCE_TOL = 1e-4
DT_SCALE = 0.05


class TraceDriftError(RuntimeError):
    pass


class HermiticityDriftError(RuntimeError):
    pass


@dataclass(frozen=True)
class HeomConfig:
    epsilon: float
    omega0: float
    g0: float
    alpha: float
    omega_c: float
    fock_dim: int = 10
    ell_c: int = 8
    dt: float | None = None
    convention: str = "standard"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if not self.g0 >= 0:
            raise ValueError("g0 must be non-negative")
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")
        if not self.omega_c > 0:
            raise ValueError("omega_c must be positive")
        if not (isinstance(self.fock_dim, (int, np.integer)) and self.fock_dim >= 1):
            raise ValueError("fock_dim must be an integer >= 1")
        if not (isinstance(self.ell_c, (int, np.integer)) and self.ell_c >= 0):
            raise ValueError("ell_c must be an integer >= 0")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")

    @classmethod
    def from_lambda(cls, lam: float, *, epsilon: float, alpha: float, omega_c: float,
                    omega0: float = 1.0, **kw) -> "HeomConfig":
        if not lam >= 0:
            raise ValueError("lambda must be non-negative")
        return cls(epsilon=epsilon, omega0=omega0, g0=omega0 * math.sqrt(lam),
                   alpha=alpha, omega_c=omega_c, **kw)

    @property
    def lam(self) -> float:
        return (self.g0 / self.omega0) ** 2

    @property
    def dim(self) -> int:
        return 2 * self.fock_dim

    @property
    def n_ados(self) -> int:
        return (self.ell_c + 1) * (self.ell_c + 2) // 2

    @property
    def resolved_dt(self) -> float:
        if self.dt is not None:
            return float(self.dt)
        return DT_SCALE / max(self.epsilon, self.omega_c, self.omega0 * self.fock_dim, 1.0)

    @property
    def decay_vector(self) -> tuple[complex, complex]:
        return (self.omega_c - 1j * self.epsilon, self.omega_c + 1j * self.epsilon)

    def lower_coefficients(self) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
        """(left, right) multipliers of sx for Psi_1 and Psi_2."""
        if self.convention == "quarter":
            c, s = 0.125j * self.alpha, 1.0
        else:
            c, s = 0.5j * self.alpha, -1.0
        out = []
        for p in (1, 2):
            sign = s * (-1) ** p
            out.append((c * (sign - 1.0), c * (sign + 1.0)))
        return tuple(out)


@dataclass(frozen=True)
class AdoTable:
    """Dense enumeration of hierarchy indices (l1, l2) with l1 + l2 <= ell_c."""

    ell_c: int
    indices: tuple = field(init=False)
    position: dict = field(init=False, repr=False)

    def __post_init__(self):
        idx = tuple((l1, n - l1) for n in range(self.ell_c + 1) for l1 in range(n, -1, -1))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "position", {k: i for i, k in enumerate(idx)})

    def __len__(self) -> int:
        return len(self.indices)

    def neighbour(self, k: int, d1: int, d2: int) -> int | None:
        l1, l2 = self.indices[k]
        return self.position.get((l1 + d1, l2 + d2))

    def arrays(self):
        """Index arrays (up1, up2, down1, down2, swap); missing neighbours map to len(self)."""
        M = len(self)
        pick = lambda d1, d2: np.array(
            [M if (j := self.neighbour(k, d1, d2)) is None else j for k in range(M)])
        swap = np.array([self.position[(l2, l1)] for l1, l2 in self.indices])
        return pick(1, 0), pick(0, 1), pick(-1, 0), pick(0, -1), swap

    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.array(self.indices, dtype=float).reshape(-1, 2)
        return a[:, 0], a[:, 1]


@dataclass
class HierarchyState:
    rhos: np.ndarray
    time: float = 0.0

    @classmethod
    def initial(cls, config: HeomConfig, rho_sa0) -> "HierarchyState":
        d = config.dim
        rhos = np.zeros((config.n_ados, d, d), dtype=complex)
        rhos[0] = rho_sa0
        return cls(rhos, 0.0)


def ladder(fock_dim: int) -> np.ndarray:
    """Truncated annihilation operator with <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, fock_dim, dtype=float)), 1)


def sigma_x_full(fock_dim: int) -> np.ndarray:
    return np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(fock_dim))


def sigma_z_full(fock_dim: int) -> np.ndarray:
    return np.kron(np.diag([1.0, -1.0]), np.eye(fock_dim))


def build_hsa(config: HeomConfig) -> np.ndarray:
    """eps/2 sz + w0 a^dag a + g0 sz (a^dag + a) on TLS (x) Fock, |e> first."""
    N = config.fock_dim
    a = ladder(N)
    sz = np.diag([1.0, -1.0])
    H = (0.5 * config.epsilon * np.kron(sz, np.eye(N))
         + config.omega0 * np.kron(np.eye(2), a.T @ a)
         + config.g0 * np.kron(sz, a + a.T))
    return H.astype(complex)


def excited_vacuum(fock_dim: int) -> np.ndarray:
    rho = np.zeros((2 * fock_dim, 2 * fock_dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def embed_state(rho_sa: np.ndarray, fock_dim: int) -> np.ndarray:
    """Zero-pad a TLS (x) Fock density matrix to a larger Fock truncation."""
    n_old = rho_sa.shape[0] // 2
    if fock_dim < n_old:
        raise ValueError("can only embed into a larger Fock space")
    r = np.asarray(rho_sa).reshape(2, n_old, 2, n_old)
    out = np.zeros((2, fock_dim, 2, fock_dim), dtype=complex)
    out[:, :n_old, :, :n_old] = r
    return out.reshape(2 * fock_dim, 2 * fock_dim)


def partial_trace_osc(rho_sa: np.ndarray) -> np.ndarray:
    n = rho_sa.shape[-1] // 2
    r = rho_sa.reshape(rho_sa.shape[:-2] + (2, n, 2, n))
    return np.einsum("...injn->...ij", r)


def heom_rhs(state: HierarchyState, config: HeomConfig) -> HierarchyState:
    """Time derivative of every auxiliary operator, written term by term."""
    table = AdoTable(config.ell_c)
    up1, up2, dn1, dn2, _ = table.arrays()
    l1, l2 = table.levels()
    v1, v2 = config.decay_vector
    (cl1, cr1), (cl2, cr2) = config.lower_coefficients()
    H = build_hsa(config)
    sx = sigma_x_full(config.fock_dim)

    S = state.rhos
    d = S.shape[-1]
    Sp = np.concatenate([S, np.zeros((1, d, d), dtype=complex)])
    damp = (l1 * v1 + l2 * v2)[:, None, None]
    out = -1j * (H @ S - S @ H) - damp * S
    Y = Sp[up1] + Sp[up2]
    out += -1j * (sx @ Y - Y @ sx)
    Z1 = l1[:, None, None] * Sp[dn1]
    Z2 = l2[:, None, None] * Sp[dn2]
    out += cl1 * (sx @ Z1) + cr1 * (Z1 @ sx) + cl2 * (sx @ Z2) + cr2 * (Z2 @ sx)
    return HierarchyState(out, state.time)


def hierarchy_generator(config: HeomConfig) -> sp.csr_matrix:
    """Sparse generator acting on the row-major flattened ADO stack."""
    table = AdoTable(config.ell_c)
    M = len(table)
    d = config.dim
    Id = sp.identity(d, format="csr", dtype=complex)
    H = sp.csr_matrix(build_hsa(config))
    sx = sp.csr_matrix(sigma_x_full(config.fock_dim).astype(complex))
    # vec(A X B) = kron(A, B^T) vec(X) for row-major vec
    left = lambda A: sp.kron(A, Id, format="csr")
    right = lambda A: sp.kron(Id, A.T, format="csr")
    h_comm = -1j * (left(H) - right(H))
    up = -1j * (left(sx) - right(sx))
    v1, v2 = config.decay_vector
    lower = [cl * left(sx) + cr * right(sx) for cl, cr in config.lower_coefficients()]
    eye = sp.identity(d * d, format="csr", dtype=complex)

    blocks = [[None] * M for _ in range(M)]
    for k, (l1, l2) in enumerate(table.indices):
        blocks[k][k] = h_comm - (l1 * v1 + l2 * v2) * eye
        for d1, d2 in ((1, 0), (0, 1)):
            j = table.neighbour(k, d1, d2)
            if j is not None:
                blocks[k][j] = up
        for p, (d1, d2), lp in ((0, (-1, 0), l1), (1, (0, -1), l2)):
            if lp:
                blocks[k][table.neighbour(k, d1, d2)] = lp * lower[p]
    if M == 1:
        return sp.csr_matrix(blocks[0][0])
    return sp.bmat(blocks, format="csr")


def _parity_mask(config: HeomConfig) -> np.ndarray:
    # even tiers live on TLS-diagonal blocks, odd tiers on TLS-off-diagonal blocks
    N = config.fock_dim
    tls = np.repeat([0, 1], N)
    off = (tls[:, None] != tls[None, :]).ravel()
    level = np.array([l1 + l2 for l1, l2 in AdoTable(config.ell_c).indices])
    return (off[None, :] == (level[:, None] % 2 == 1)).ravel()


def _check_initial(rho: np.ndarray, d: int) -> None:
    if rho.shape != (d, d):
        raise ValueError(f"rho_sa0 must be {d}x{d}")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValueError("rho_sa0 must have unit trace")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("rho_sa0 must be Hermitian")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
        raise ValueError("rho_sa0 must be positive semidefinite")


@dataclass
class HeomResult:
    trace: PopulationTrace
    reduced_states: np.ndarray
    max_trace_drift: float
    max_pairing_residual: float
    final_state: HierarchyState
    config: HeomConfig


def heom_evolve(config: HeomConfig, rho_sa0=None, grid: TimeGrid | None = None) -> HeomResult:
    """Integrate the hierarchy with fixed-step RK4, sampling P(t) and rho_s(t) on ``grid``.

    ``rho_sa0`` defaults to |e><e| (x) |0><0|. Raises :class:`TraceDriftError` or
    :class:`HermiticityDriftError` if the invariants drift past 1e-6.
    """
    if grid is None:
        raise ValueError("grid is required")
    if grid.t_start != 0:
        raise ValueError("HEOM grid must start at t = 0")
    d = config.dim
    rho0 = excited_vacuum(config.fock_dim) if rho_sa0 is None else np.asarray(rho_sa0, dtype=complex)
    _check_initial(rho0, d)

    table = AdoTable(config.ell_c)
    M = len(table)
    swap = table.arrays()[4]
    L = hierarchy_generator(config)
    N = config.fock_dim
    tls_off = np.abs(rho0.reshape(2, N, 2, N)[[0, 1], :, [1, 0], :]).max() == 0
    mask = _parity_mask(config) if tls_off else np.ones(M * d * d, dtype=bool)
    L = L[mask][:, mask].tocsr()

    full = np.zeros(M * d * d, dtype=complex)
    full[: d * d] = rho0.ravel()
    v = full[mask].copy()

    n_sub = max(1, math.ceil(grid.step / config.resolved_dt - 1e-9))
    h = grid.step / n_sub
    sz = sigma_z_full(N)

    n = grid.n_points
    P = np.empty(n)
    reduced = np.empty((n, 2, 2), dtype=complex)
    drift = 0.0
    pairing = 0.0
    stack = None
    for i in range(n):
        if i:
            for _ in range(n_sub):
                k1 = L @ v
                k2 = L @ (v + 0.5 * h * k1)
                k3 = L @ (v + 0.5 * h * k2)
                k4 = L @ (v + h * k3)
                v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        full[:] = 0.0
        full[mask] = v
        stack = full.reshape(M, d, d)
        rho = stack[0]
        tr_err = abs(np.trace(rho) - 1.0)
        pair_err = float(np.max(np.abs(stack.conj().transpose(0, 2, 1) - stack[swap])))
        drift = max(drift, tr_err)
        pairing = max(pairing, pair_err)
        if tr_err > DRIFT_TOL:
            raise TraceDriftError(f"trace drift {tr_err:.3g} at t={grid.times[i]:g}")
        if pair_err > DRIFT_TOL:
            raise HermiticityDriftError(f"hermiticity drift {pair_err:.3g} at t={grid.times[i]:g}")
        P[i] = np.trace(sz @ rho).real
        reduced[i] = partial_trace_osc(rho)

    params = {
        "epsilon": config.epsilon, "omega0": config.omega0, "g0": config.g0, "lambda": config.lam,
        "alpha": config.alpha, "omega_c": config.omega_c, "fock_dim": config.fock_dim,
        "ell_c": config.ell_c, "dt": h, "convention": config.convention,
    }
    return HeomResult(
        trace=PopulationTrace(grid.times, P, "heom", params),
        reduced_states=reduced,
        max_trace_drift=drift,
        max_pairing_residual=pairing,
        final_state=HierarchyState(stack.copy(), float(grid.times[-1])),
        config=config,
    )


@dataclass
class ConvergenceReport:
    ell_c: int
    fock_dim: int
    delta_ell_c: float
    delta_fock: float
    tol: float = CONVERGENCE_TOL

    @property
    def converged(self) -> bool:
        return self.delta_ell_c < self.tol and self.delta_fock < self.tol

    @property
    def message(self) -> str:
        if self.converged:
            return "converged"
        return (f"not converged: raise truncations (delta ell_c={self.delta_ell_c:.3g}, "
                f"delta fock={self.delta_fock:.3g}, tol={self.tol:g})")

    def as_dict(self) -> dict:
        return {"ell_c": self.ell_c, "fock_dim": self.fock_dim, "delta_ell_c": self.delta_ell_c,
                "delta_fock": self.delta_fock, "tol": self.tol, "converged": self.converged}


def convergence_check(config: HeomConfig, rho_sa0=None, grid: TimeGrid | None = None,
                      base: HeomResult | None = None, tol: float = CONVERGENCE_TOL) -> ConvergenceReport:
    """Compare against runs at ell_c + 2 and fock_dim + 2; not converged is a recommendation, not an error."""
    rho0 = excited_vacuum(config.fock_dim) if rho_sa0 is None else np.asarray(rho_sa0, dtype=complex)
    # keep dt identical across rungs so only the truncation changes
    dt = config.resolved_dt
    cfg = replace(config, dt=dt)
    if base is None:
        base = heom_evolve(cfg, rho0, grid)
    P = base.trace.values
    deeper = heom_evolve(replace(cfg, ell_c=cfg.ell_c + 2), rho0, grid).trace.values
    bigger_cfg = replace(cfg, fock_dim=cfg.fock_dim + 2)
    bigger = heom_evolve(bigger_cfg, embed_state(rho0, bigger_cfg.fock_dim), grid).trace.values
    return ConvergenceReport(config.ell_c, config.fock_dim,
                             float(np.max(np.abs(deeper - P))), float(np.max(np.abs(bigger - P))), tol)


def auto_converge(config: HeomConfig, rho_sa0=None, grid: TimeGrid | None = None,
                  ceiling: int = 30, tol: float = CONVERGENCE_TOL):
    """Raise ell_c in steps of 2 until :func:`convergence_check` passes or ``ceiling`` is hit."""
    cfg = config
    while True:
        base = heom_evolve(cfg, rho_sa0, grid)
        report = convergence_check(cfg, rho_sa0, grid, base=base, tol=tol)
        if report.converged or cfg.ell_c + 2 > ceiling:
            return base, report
        cfg = replace(cfg, ell_c=cfg.ell_c + 2)


def step_halving_delta(config: HeomConfig, rho_sa0=None, grid: TimeGrid | None = None,
                       base: HeomResult | None = None) -> float:
    cfg = replace(config, dt=config.resolved_dt)
    if base is None:
        base = heom_evolve(cfg, rho_sa0, grid)
    half = heom_evolve(replace(cfg, dt=cfg.resolved_dt / 2), rho_sa0, grid)
    return float(np.max(np.abs(half.trace.values - base.trace.values)))


def correlation_function(bath, t):
    """Zero-temperature bath correlation alpha exp(-(wc + i eps) t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    val = bath.alpha * np.exp(-(bath.omega_c + 1j * bath.epsilon) * t)
    return complex(val) if val.ndim == 0 else val


def weak_coupling_deviation(config: HeomConfig, grid: TimeGrid) -> float:
    """Max |P_heom - P_closed_form| for an uncoupled oscillator; large values flag a rate mismatch."""
    if config.g0 != 0:
        raise ValueError("weak-coupling check needs g0 = 0")
    res = heom_evolve(config, None, grid)
    ref = closed_form_P_lambda0(grid.times, config.alpha, config.omega_c)
    return float(np.max(np.abs(res.trace.values - ref)))

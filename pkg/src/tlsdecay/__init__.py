"""Controllable decoherence of a dissipative two-level system.

Three cross-checking solvers for the population difference P(t) of a TLS in
a Lorentz bath, steered by an ancillary oscillator, a periodic drive or an
ancillary reservoir: Laplace-domain inversion, an exact exponential-sum ODE
form of the polaron master equation, and HEOM for the non-RWA model.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DriveMod,
    HOMod,
    LorentzBath,
    PopulationTrace,
    ReservoirMod,
    SeriesCapExceeded,
    TimeGrid,
    poisson_weights,
    spectral_density,
)
from .generalizations import (  # noqa: E402
    ReservoirSpectral,
    bessel_j0,
    effective_alpha,
    modulation_G,
    reservoir_spectral_density,
)
from .laplace import (  # noqa: E402
    LaplaceKernel,
    kernel_bare,
    kernel_multimode,
    kernel_single_mode,
    population_trace_laplace,
    zakian_invert,
)
from .polaron_me import (  # noqa: E402
    ExpSumKernel,
    closed_form_P_lambda0,
    dephasing_rate,
    exp_approx_trace,
    expsum_bare,
    expsum_multimode,
    expsum_single_mode,
    relaxation_rate,
    volterra_solve,
)

"""Lamb shift of a two-level atom on a circular orbit inside a lossy cavity."""

__version__ = "0.1.0"

from .params import (  # noqa: E402
    AtomParams,
    CavityParams,
    TrajectoryParams,
    build_params,
    check_bad_cavity,
    derive_cavity,
    derive_trajectory,
)
from .spectral import SpectralDensity, gamma0, gamma_noninertial  # noqa: E402
from .lambshift import (  # noqa: E402
    ShiftResult,
    delta0_closed,
    delta0_highq,
    delta0_quadrature,
    delta_noninertial,
    delta_total,
)

__all__ = [
    "__version__",
    "AtomParams",
    "CavityParams",
    "TrajectoryParams",
    "build_params",
    "check_bad_cavity",
    "derive_cavity",
    "derive_trajectory",
    "SpectralDensity",
    "gamma0",
    "gamma_noninertial",
    "ShiftResult",
    "delta0_closed",
    "delta0_highq",
    "delta0_quadrature",
    "delta_noninertial",
    "delta_total",
]

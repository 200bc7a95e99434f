"""Lorentzian cavity density of states, the circular-orbit correlator bracket
and the inertial / noninertial spontaneous decay rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import AtomParams, DerivedCavity, DerivedTrajectory


@dataclass(frozen=True)
class SpectralDensity:
    omega_c: float
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")

    @classmethod
    def from_cavity(cls, dc: DerivedCavity) -> "SpectralDensity":
        return cls(dc.omega_c, dc.kappa)

    @property
    def peak(self) -> float:
        return 1.0 / (math.pi * self.kappa)


def dos(omega_k, sd: SpectralDensity):
    """rho(omega_k) = (kappa/pi) / (kappa^2 + (omega_k - omega_c)^2)."""
    d = omega_k - sd.omega_c
    return (sd.kappa / math.pi) / (sd.kappa * sd.kappa + d * d)


def dos_prime(omega_k, sd: SpectralDensity):
    d = omega_k - sd.omega_c
    den = sd.kappa * sd.kappa + d * d
    return -(2.0 / math.pi) * sd.kappa * d / (den * den)


def theta(x):
    """Heaviside step with the symmetric convention theta(0) = 1/2."""
    return np.heaviside(x, 0.5)


# --- the bracket of the first-order correlator ---------------------------

@dataclass(frozen=True)
class BracketTerm:
    """One term ``weight * S * (nu+shift*w) rho(nu+shift*w) theta(nu+shift*w)``.

    ``S`` is 1 for the static term, ``zeta(omega)`` for the orbital sidebands
    (``orbital_flag``) and ``zeta(nu+shift*w)`` for the curvature terms
    (``curvature_flag``).
    """

    weight: float
    shift: int
    curvature_flag: bool = False
    orbital_flag: bool = False


BRACKET_TERMS = (
    BracketTerm(1.0, 0),
    BracketTerm(0.25, +1, orbital_flag=True),
    BracketTerm(0.25, -1, orbital_flag=True),
    BracketTerm(-0.4, 0, curvature_flag=True),
    BracketTerm(0.2, +1, curvature_flag=True),
    BracketTerm(0.2, -1, curvature_flag=True),
)


def bracket(nu_bar, traj: DerivedTrajectory, sd: SpectralDensity):
    """Theta-gated six-term bracket multiplying the PV kernel of the total shift.

    The overall ``gamma / (3 pi hbar eps0 V)`` prefactor is left out; the
    shift routines apply ``gamma * eta / (2 pi)``.
    """
    nu_bar = np.asarray(nu_bar, dtype=float)
    total = np.zeros_like(nu_bar)
    for term in BRACKET_TERMS:
        x = nu_bar + term.shift * traj.omega
        value = x * dos(x, sd) * theta(x)
        if term.orbital_flag:
            value = value * traj.zeta
        elif term.curvature_flag:
            value = value * traj.zeta_of(x)
        total = total + term.weight * value
    return total if total.ndim else float(total)


# --- decay rates -----------------------------------------------------------

def gamma0(atom: AtomParams, dc: DerivedCavity, sd: SpectralDensity) -> float:
    """Inertial spontaneous decay rate eta * rho(Omega0) * Omega0."""
    return dc.eta * dos(atom.omega0, sd) * atom.omega0


def gamma_noninertial(
    atom: AtomParams, traj: DerivedTrajectory, dc: DerivedCavity, sd: SpectralDensity
) -> float:
    """Purely-noninertial decay rate, first order in zeta(omega).

    Only the ``omega + Omega0_bar`` sideband appears, as in the published
    expression; the ``omega - Omega0_bar`` sideband is deliberately absent.
    """
    w0 = atom.omega0
    side = traj.omega + traj.omega0_bar
    inner = -w0 * dos_prime(w0, sd) + 0.9 * (side / w0) * dos(side, sd)
    return 0.5 * dc.eta * traj.zeta * w0 * inner

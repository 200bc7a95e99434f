"""Physical input parameters, derived quantities and validity checks.

All frequencies are angular frequencies in s^-1, lengths in m, volumes in
m^3 and dipole moments in C m.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

from .constants import C, EPS0, HBAR

#: First-order-in-zeta expansion is trusted up to this value.
ZETA_WARN = 0.01
DEFAULT_MARGIN = 3.0


class ParameterError(ValueError):
    """A physical parameter violates its domain."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConfigError(ValueError):
    """A configuration file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class FirstOrderWarning(UserWarning):
    """zeta is large enough that the first-order correlator is doubtful."""


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ParameterError(name, f"must be a positive finite number, got {value!r}")


def _require_nonnegative(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise ParameterError(name, f"must be a non-negative finite number, got {value!r}")


@dataclass(frozen=True)
class AtomParams:
    omega0: float
    dipole: float

    def __post_init__(self):
        _require_positive("omega0", self.omega0)
        _require_positive("dipole", self.dipole)


@dataclass(frozen=True)
class CavityParams:
    omega_c: float
    q_factor: float
    volume: float

    def __post_init__(self):
        _require_positive("omega_c", self.omega_c)
        _require_positive("volume", self.volume)
        if not (math.isfinite(self.q_factor) and self.q_factor >= 1):
            raise ParameterError("q_factor", f"must be >= 1, got {self.q_factor!r}")


@dataclass(frozen=True)
class TrajectoryParams:
    omega: float = 0.0
    radius: float = 0.0

    def __post_init__(self):
        _require_nonnegative("omega", self.omega)
        _require_nonnegative("radius", self.radius)
        if self.omega * self.radius >= C:
            raise ParameterError(
                "omega",
                f"orbital speed omega*radius = {self.omega * self.radius:.6g} m/s "
                "is not subluminal",
            )


@dataclass(frozen=True)
class DerivedCavity:
    omega_c: float
    q_factor: float
    kappa: float
    g: float
    eta: float


@dataclass(frozen=True)
class DerivedTrajectory:
    omega: float
    radius: float
    zeta: float
    gamma: float
    omega0_bar: float
    accel: float

    def zeta_of(self, x):
        """zeta evaluated at an arbitrary frequency (array friendly)."""
        return x * x * (self.radius * self.radius) / (C * C)


@dataclass(frozen=True)
class ValidityReport:
    passed: bool
    ratio: float
    margin: float

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return f"bad-cavity g/kappa = {self.ratio:.4g} (margin {self.margin:g}): {verdict}"


def derive_cavity(atom: AtomParams, cavity: CavityParams) -> DerivedCavity:
    kappa = cavity.omega_c / cavity.q_factor
    g = atom.dipole * math.sqrt(cavity.omega_c / (2.0 * HBAR * EPS0 * cavity.volume))
    eta = atom.dipole**2 / (3.0 * math.pi * HBAR * EPS0 * cavity.volume)
    return DerivedCavity(cavity.omega_c, cavity.q_factor, kappa, g, eta)


def dipole_for_eta(eta: float, volume: float) -> float:
    """Back-solve |d'| from a target eta and mode volume."""
    _require_positive("eta", eta)
    _require_positive("volume", volume)
    return math.sqrt(eta * 3.0 * math.pi * HBAR * EPS0 * volume)


def check_bad_cavity(dc: DerivedCavity, margin: float = DEFAULT_MARGIN) -> ValidityReport:
    """Report whether ``g * margin <= kappa`` (the Markovian bad-cavity regime)."""
    if not margin > 1:
        raise ValueError(f"margin must exceed 1, got {margin!r}")
    ratio = dc.g / dc.kappa
    return ValidityReport(passed=dc.g * margin <= dc.kappa, ratio=ratio, margin=margin)


def derive_trajectory(atom: AtomParams, traj: TrajectoryParams) -> DerivedTrajectory:
    beta = traj.omega * traj.radius / C
    if beta >= 1:
        raise ParameterError("omega", "superluminal trajectory (omega*radius >= c)")
    zeta = beta * beta
    if zeta > ZETA_WARN:
        warnings.warn(
            f"zeta = {zeta:.3g} exceeds {ZETA_WARN}; results are first order in zeta",
            FirstOrderWarning,
            stacklevel=2,
        )
    gamma = 1.0 / math.sqrt(1.0 - zeta)
    return DerivedTrajectory(
        omega=traj.omega,
        radius=traj.radius,
        zeta=zeta,
        gamma=gamma,
        omega0_bar=atom.omega0 / gamma,
        accel=traj.omega**2 * traj.radius,
    )


# --- key = value configuration -------------------------------------------

CONFIG_KEYS = ("omega0", "dipole", "eta", "omega_c", "q_factor", "volume", "omega", "radius")


def parse_config_text(text: str) -> dict[str, float]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, val = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        try:
            values[key] = float(val.strip())
        except ValueError:
            raise ConfigError(f"value for {key!r} is not a number: {val.strip()!r}", lineno) from None
    return values


def load_config(path: str | Path) -> dict[str, float]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text)


def build_params(
    values: Mapping[str, float],
) -> tuple[AtomParams, CavityParams, TrajectoryParams]:
    """Turn a flat parameter mapping into the three parameter records.

    ``eta`` may stand in for ``dipole``; the dipole is then back-solved from
    the mode volume.
    """
    missing = [k for k in ("omega0", "omega_c", "q_factor", "volume") if k not in values]
    if "dipole" not in values and "eta" not in values:
        missing.append("dipole (or eta)")
    if missing:
        raise ConfigError("missing parameters: " + ", ".join(missing))
    if "dipole" in values and "eta" in values:
        raise ConfigError("give either dipole or eta, not both")
    cavity = CavityParams(values["omega_c"], values["q_factor"], values["volume"])
    dipole = values.get("dipole")
    if dipole is None:
        dipole = dipole_for_eta(values["eta"], cavity.volume)
    atom = AtomParams(values["omega0"], dipole)
    traj = TrajectoryParams(values.get("omega", 0.0), values.get("radius", 0.0))
    return atom, cavity, traj


def as_dict(obj) -> dict[str, float]:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


__all__ = [
    "AtomParams",
    "CavityParams",
    "TrajectoryParams",
    "DerivedCavity",
    "DerivedTrajectory",
    "ValidityReport",
    "ParameterError",
    "ConfigError",
    "FirstOrderWarning",
    "derive_cavity",
    "derive_trajectory",
    "check_bad_cavity",
    "dipole_for_eta",
    "parse_config_text",
    "load_config",
    "build_params",
]

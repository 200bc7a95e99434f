"""Inertial and purely-noninertial Lamb shifts of a circulating two-level atom.

The total shift is ``gamma * eta / (2 pi)`` times the PV integral of the
correlator bracket against ``1/(nu + W) - 1/(nu - W)`` with ``W`` the
redshifted gap.  It is split into three separately integrated pieces:

* ``inertial``  -- rho(nu) nu on [0, inf)
* ``sideband``  -- the two zeta(omega)-weighted shifted copies
* ``curvature`` -- the cubic nu^3 rho(nu) terms, grouped so that their
  individually log-divergent tails cancel inside the integrand
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import C
from .params import AtomParams, DerivedCavity, DerivedTrajectory
from .pvquad import WINDOW_WIDTHS, PVProblem, PVResult, pv_integrate
from .spectral import SpectralDensity, dos

DEFAULT_REL_TOL = 1e-8
TAIL_FACTOR = 1e3
NEAR_RESONANCE = 1e-6
HIGHQ_MIN_Q = 1e3
_EPS = np.finfo(float).eps


class NearResonance(ValueError):
    """Closed forms are ill-conditioned this close to omega_c = Omega0."""


class UngroupedDivergence(ValueError):
    """The cubic terms cannot be integrated one by one to infinity."""


def kernel(x, pole: float):
    """1/(x + p) - 1/(x - p), written to avoid cancellation for |x| >> p."""
    return -2.0 * pole / ((x - pole) * (x + pole))


def _near_resonance(omega0: float, omega_c: float) -> bool:
    return abs(omega_c - omega0) < NEAR_RESONANCE * omega_c


# --- closed forms for the inertial shift ------------------------------------

def closed_form_b(omega0: float, omega_c: float, q: float, eta: float):
    """The closed-form inertial shift at quality factor ``q``; returns (value, roundoff).

    Rearranged in u = Omega0/omega_c so that no intermediate overflows and
    1 - u^2 is formed without cancellation.
    """
    u = omega0 / omega_c
    one_minus_u2 = (omega_c - omega0) * (omega_c + omega0) / omega_c**2
    s = 2.0 * q * (math.pi + 2.0 * math.atan(2.0 * q))
    a = 2.0 * math.log(u) - math.log1p(1.0 / (4.0 * q * q))
    x = 2.0 * q * u * (-4.0 * q * q * one_minus_u2 - 1.0)
    y = 8.0 * q**3 * u**3 + 2.0 * q * (4.0 * q * q + 1.0) * u
    den = 16.0 * q**4 * one_minus_u2**2 + 8.0 * q * q * (u * u + 1.0) + 1.0
    pref = eta / (2.0 * math.pi**2 * den)
    value = pref * (s * x + a * y)
    err = 16.0 * _EPS * (pref * (abs(s * x) + abs(a * y)) + abs(value))
    return value, err


def _delta0_closed(atom: AtomParams, dc: DerivedCavity, sd: SpectralDensity):
    # The closed form integrates the Lorentzian exactly only when its quality
    # factor is read as omega_c / (2 kappa); with kappa = omega_c / Q that is Q/2.
    return closed_form_b(atom.omega0, sd.omega_c, sd.omega_c / (2.0 * sd.kappa), dc.eta)


def delta0_closed_nominal_q(atom: AtomParams, dc: DerivedCavity, sd: SpectralDensity) -> float:
    """The closed form evaluated with the cavity's own Q (off by O(1/Q))."""
    return closed_form_b(atom.omega0, sd.omega_c, dc.q_factor, dc.eta)[0]


def delta0_closed(atom: AtomParams, dc: DerivedCavity, sd: SpectralDensity) -> float:
    if _near_resonance(atom.omega0, sd.omega_c):
        raise NearResonance(
            f"|omega_c - Omega0| < {NEAR_RESONANCE:g} omega_c; use delta0_quadrature"
        )
    return _delta0_closed(atom, dc, sd)[0]


def delta0_highq(atom: AtomParams, dc: DerivedCavity, sd: SpectralDensity) -> float:
    """Leading high-Q form of the inertial shift (Q >= 1e3, off resonance)."""
    if dc.q_factor < HIGHQ_MIN_Q:
        raise ValueError(f"high-Q form needs Q >= {HIGHQ_MIN_Q:g}, got {dc.q_factor:g}")
    if _near_resonance(atom.omega0, sd.omega_c):
        raise NearResonance("high-Q form is singular at omega_c = Omega0")
    w0, wc, q = atom.omega0, sd.omega_c, dc.q_factor
    d = (wc - w0) * (wc + w0)
    log_term = wc * (w0 * w0 + wc * wc) * math.log(wc / w0) / (2.0 * math.pi**2 * q * d * d)
    return -dc.eta * w0 * (log_term + wc / (math.pi * d))


# --- integrands --------------------------------------------------------------

def _shifted(nu, shift: float, sd: SpectralDensity):
    """x = nu + shift, its offset from the cavity line and rho(x).

    The offset is taken from the shifted centre ``omega_c - shift`` so it is
    exact near the line even when ``shift`` dwarfs ``nu``.
    """
    d = nu - (sd.omega_c - shift)
    return nu + shift, d, (sd.kappa / math.pi) / (sd.kappa * sd.kappa + d * d)


def cubic(x, sd: SpectralDensity):
    """x^3 rho(x)."""
    return x**3 * dos(x, sd)


def _remainder(x, d, sd: SpectralDensity):
    wc, k = sd.omega_c, sd.kappa
    return ((3.0 * wc * wc - k * k) * x - 2.0 * wc * (wc * wc + k * k)) / (d * d + k * k)


def cubic_remainder(x, sd: SpectralDensity):
    """q(x) with x^3 rho(x) = (kappa/pi) (x + 2 omega_c + q(x))."""
    return _remainder(x, x - sd.omega_c, sd)


def inertial_density(nu, sd: SpectralDensity):
    return np.where(nu > 0, nu * dos(nu, sd), 0.0)


def sideband_density(nu, traj: DerivedTrajectory, sd: SpectralDensity):
    out = 0.0
    for shift in (traj.omega, -traj.omega):
        x, _, rho = _shifted(nu, shift, sd)
        out = out + np.where(x > 0, x * rho, 0.0)
    return out


def curvature_density(nu, traj: DerivedTrajectory, sd: SpectralDensity):
    """h(nu) theta(nu) - [h(nu+w) theta(nu+w) + h(nu-w) theta(nu-w)] / 2, h = x^3 rho.

    Where all three gates are open the linear growth of h is cancelled
    analytically, leaving a second difference of the decaying remainder.
    """
    gated = 0.0
    rem = 0.0
    for shift, weight in ((0.0, 1.0), (traj.omega, -0.5), (-traj.omega, -0.5)):
        x, d, rho = _shifted(nu, shift, sd)
        gated = gated + weight * np.where(x > 0, x**3 * rho, 0.0)
        rem = rem + weight * _remainder(x, d, sd)
    open_ = (sd.kappa / math.pi) * rem
    return np.where(nu - traj.omega > 0, open_, gated)


def appendix_integrands(traj: DerivedTrajectory, sd: SpectralDensity) -> dict:
    """The individually divergent cubic pieces and their pairwise groupings.

    ``f1a``, ``f1b`` (and ``f2b``) decay like 1/nu; the grouped ``i1`` and
    ``i2`` decay like 1/nu^2.  Used for tail diagnostics only.
    """
    p, w, k = traj.omega0_bar, traj.omega, sd.kappa

    def f1a(nu):
        return cubic(nu, sd) * kernel(nu, p)

    def f1b(nu):
        return cubic(nu + w, sd) * kernel(nu, p)

    def f2b(nu):
        return cubic(nu - w, sd) * kernel(nu, p)

    def i1(nu):
        diff = -w + cubic_remainder(nu, sd) - cubic_remainder(nu + w, sd)
        return (k / math.pi) * diff * kernel(nu, p)

    def i2(nu):
        diff = w + cubic_remainder(nu, sd) - cubic_remainder(nu - w, sd)
        return (k / math.pi) * diff * kernel(nu, p)

    def grouped(nu):
        return curvature_density(nu, traj, sd) * kernel(nu, p)

    return {"f1a": f1a, "f1b": f1b, "f2b": f2b, "i1": i1, "i2": i2, "grouped": grouped}


def total_integrand(traj: DerivedTrajectory, sd: SpectralDensity):
    """Full grouped bracket times kernel (without the gamma eta / 2 pi prefactor)."""
    p = traj.omega0_bar
    side_w = traj.zeta / 4.0
    curv_w = -0.4 * (traj.radius / C) ** 2

    def f(nu):
        b = inertial_density(nu, sd)
        if traj.omega > 0 and traj.radius > 0:
            b = b + side_w * sideband_density(nu, traj, sd) + curv_w * curvature_density(nu, traj, sd)
        return b * kernel(nu, p)

    return f


# --- quadrature drivers ------------------------------------------------------

def default_tail_cut(sd: SpectralDensity, traj: DerivedTrajectory | None = None, omega0: float = 0.0) -> float:
    top = sd.omega_c
    if traj is not None:
        top = max(top, traj.omega + traj.omega0_bar)
    else:
        top = max(top, omega0)
    return TAIL_FACTOR * top


def lorentz_hints(center: float, kappa: float, reach: float) -> list[float]:
    pts = [center]
    step = kappa
    while step <= reach:
        pts += [center - step, center + step]
        step *= 10.0
    return pts


def _run(integrand, lo, gates, poles, centers, sd, rel_tol, tail_cut) -> PVResult:
    reach = max(sd.omega_c, max(abs(c) for c in centers))
    hints = list(gates)
    # The integrand vanishes below the lowest gate.  A pole near that gate
    # (omega close to the redshifted gap) gets a full window by starting the
    # support further down; the gate itself becomes a breakpoint.
    pad = WINDOW_WIDTHS * sd.kappa
    near = [q for q in poles if abs(q - lo) < pad]
    if near and lo != 0.0:
        hints.append(lo)
        lo = min([lo] + near) - pad
    for c in centers:
        hints += lorentz_hints(c, sd.kappa, reach)
    problem = PVProblem(
        integrand=integrand,
        support=[(lo, math.inf)],
        poles=tuple(poles),
        rel_tol=rel_tol,
        tail_cut=tail_cut,
        breakpoints=tuple(h for h in hints if lo < h < tail_cut),
        width_scale=sd.kappa,
    )
    return pv_integrate(problem)


def inertial_integral(sd: SpectralDensity, pole: float, rel_tol=DEFAULT_REL_TOL, tail_cut=None) -> PVResult:
    """PV int_0^inf rho(nu) nu [1/(nu+p) - 1/(nu-p)] dnu."""
    if tail_cut is None:
        tail_cut = TAIL_FACTOR * max(sd.omega_c, pole)
    return _run(
        lambda nu: inertial_density(nu, sd) * kernel(nu, pole),
        0.0, (), (pole, -pole), (sd.omega_c,), sd, rel_tol, tail_cut,
    )


def sideband_integral(traj: DerivedTrajectory, sd: SpectralDensity, rel_tol=DEFAULT_REL_TOL, tail_cut=None) -> PVResult:
    p, w = traj.omega0_bar, traj.omega
    if tail_cut is None:
        tail_cut = default_tail_cut(sd, traj)
    return _run(
        lambda nu: sideband_density(nu, traj, sd) * kernel(nu, p),
        -w, (w,), (p, -p), (sd.omega_c - w, sd.omega_c + w), sd, rel_tol, tail_cut,
    )


def curvature_integral(traj: DerivedTrajectory, sd: SpectralDensity, rel_tol=DEFAULT_REL_TOL, tail_cut=None) -> PVResult:
    p, w = traj.omega0_bar, traj.omega
    if tail_cut is None:
        tail_cut = default_tail_cut(sd, traj)
    return _run(
        lambda nu: curvature_density(nu, traj, sd) * kernel(nu, p),
        -w, (0.0, w), (p, -p), (sd.omega_c - w, sd.omega_c, sd.omega_c + w), sd, rel_tol, tail_cut,
    )


def _part_trace(name, weight, r: PVResult) -> dict:
    return {
        "part": name,
        "weight": weight,
        "integral": r.value,
        "err_estimate": r.err_estimate,
        "tail_bound": r.tail_bound,
        "tail_slope": r.tail_slope,
        "subdivisions": r.subdivisions,
        "roundoff_limited": r.roundoff_limited,
    }


def delta0_quadrature(
    atom: AtomParams,
    dc: DerivedCavity,
    sd: SpectralDensity,
    tol: float = DEFAULT_REL_TOL,
    tail_cut: float | None = None,
    full_output: bool = False,
):
    """Inertial shift by direct PV quadrature (the oracle for the closed forms)."""
    r = inertial_integral(sd, atom.omega0, tol, tail_cut)
    pref = dc.eta / (2.0 * math.pi)
    value = pref * r.value
    if not full_output:
        return value
    return value, abs(pref) * r.total_error, [_part_trace("inertial", pref, r)]


def delta_total(
    atom: AtomParams,
    dc: DerivedCavity,
    sd: SpectralDensity,
    traj: DerivedTrajectory,
    tol: float = DEFAULT_REL_TOL,
    tail_cut: float | None = None,
    grouped: bool = True,
    full_output: bool = False,
):
    """Total Lamb shift of the circulating atom."""
    if not grouped:
        raise UngroupedDivergence(
            "the cubic terms diverge logarithmically one by one; integrate them grouped"
        )
    if tail_cut is None:
        tail_cut = default_tail_cut(sd, traj)
    pref = traj.gamma * dc.eta / (2.0 * math.pi)
    parts = [("inertial", pref, inertial_integral(sd, traj.omega0_bar, tol, tail_cut))]
    if traj.omega > 0 and traj.radius > 0:
        parts.append(("sideband", pref * traj.zeta / 4.0, sideband_integral(traj, sd, tol, tail_cut)))
        curv_w = -pref * 0.4 * (traj.radius / C) ** 2
        parts.append(("curvature", curv_w, curvature_integral(traj, sd, tol, tail_cut)))
    value = math.fsum(w * r.value for _, w, r in parts)
    if not full_output:
        return value
    err = math.fsum(abs(w) * r.total_error for _, w, r in parts)
    return value, err, [_part_trace(n, w, r) for n, w, r in parts]


@dataclass(frozen=True)
class ShiftResult:
    delta0_closed: float | None
    delta0_highq: float | None
    delta0: float
    delta_total: float
    delta_noninertial: float
    err_estimate: float
    delta0_err: float
    delta_total_err: float
    method_trace: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def delta0_used(atom, dc, sd, tol=DEFAULT_REL_TOL):
    """Inertial shift at the lab gap: closed form, or quadrature near resonance."""
    if _near_resonance(atom.omega0, sd.omega_c):
        value, err, trace = delta0_quadrature(atom, dc, sd, tol, full_output=True)
        return value, err, "quadrature", trace
    value, err = _delta0_closed(atom, dc, sd)
    return value, err, "closed", []


def delta_noninertial(
    atom: AtomParams,
    dc: DerivedCavity,
    sd: SpectralDensity,
    traj: DerivedTrajectory,
    tol: float = DEFAULT_REL_TOL,
    tail_cut: float | None = None,
) -> ShiftResult:
    """Purely-noninertial shift Delta - Delta0 with full diagnostics.

    Delta0 is taken at the lab gap Omega0 (not the redshifted one).
    """
    if tail_cut is None:
        tail_cut = default_tail_cut(sd, traj)
    d0, d0_err, d0_method, d0_trace = delta0_used(atom, dc, sd, tol)
    total, total_err, parts = delta_total(atom, dc, sd, traj, tol, tail_cut, full_output=True)
    closed = d0 if d0_method == "closed" else None
    try:
        highq = delta0_highq(atom, dc, sd)
    except ValueError:
        highq = None
    trace = {
        "delta0_method": d0_method,
        "delta0_parts": d0_trace,
        "tail_cut": tail_cut,
        "rel_tol": tol,
        "grouping": "cubic terms integrated as one gated group (I1+I2+I3+I4)",
        "parts": parts,
    }
    return ShiftResult(
        delta0_closed=closed,
        delta0_highq=highq,
        delta0=d0,
        delta_total=total,
        delta_noninertial=total - d0,
        err_estimate=total_err + d0_err,
        delta0_err=d0_err,
        delta_total_err=total_err,
        method_trace=trace,
    )

"""Built-in oracle suite: PV identities, closed forms against quadrature,
and the tail behaviour of the grouped integrands."""

from __future__ import annotations

import cmath
import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

from . import lambshift as ls
from .params import build_params, derive_cavity, derive_trajectory
from .pvquad import PVProblem, pv_integrate, slope_probe, tail_bound
from .spectral import SpectralDensity, dos


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def lorentzian_pv(a: float, omega_c: float, kappa: float) -> float:
    """PV int_0^inf rho(x) / (x - a) dx in closed form (partial fractions in z = omega_c + i kappa)."""
    z = complex(omega_c, kappa)
    return ((math.log(abs(a)) - cmath.log(-z)) / (z - a)).imag / math.pi


def delta0_oracle(omega0: float, omega_c: float, kappa: float, eta: float) -> float:
    return -(eta * omega0 / (2.0 * math.pi)) * (lorentzian_pv(-omega0, omega_c, kappa) + lorentzian_pv(omega0, omega_c, kappa))


def _system(**values):
    atom, cavity, traj = build_params(values)
    dc = derive_cavity(atom, cavity)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = derive_trajectory(atom, traj)
    return atom, dc, SpectralDensity.from_cavity(dc), tr


def _check_pv_odd():
    r = pv_integrate(PVProblem(lambda x: 1.0 / x, [(-1.0, 1.0)], poles=(0.0,)))
    return abs(r.value) < 1e-12, f"PV int_-1^1 dx/x = {r.value:.3g}"


def _check_polynomial():
    worst = 0.0
    for k in range(0, 12):
        r = pv_integrate(PVProblem(lambda x, k=k: x**k, [(0.0, 1.0)]))
        worst = max(worst, abs(r.value - 1.0 / (k + 1)))
    # PV int_-1^2 (x^3 + 1)/x dx = (8+1)/3 + log 2
    r = pv_integrate(PVProblem(lambda x: (x**3 + 1.0) / x, [(-1.0, 2.0)], poles=(0.0,)))
    worst = max(worst, abs(r.value - (3.0 + math.log(2.0))))
    return worst < 1e-12, f"max abs error {worst:.2g}"


def _check_lorentzian():
    worst = 0.0
    for wc, k, a in [(1.0, 1e-4, 1.0 + 3e-4), (1e7, 1.0, 1e7 + 0.5), (2.0, 0.3, 0.7)]:
        sd = SpectralDensity(wc, k)
        r = pv_integrate(PVProblem(lambda x: dos(x, sd) / (x - a), [(0.0, math.inf)], poles=(a,),
                                   tail_cut=1e4 * max(wc, a), width_scale=k, rel_tol=1e-12))
        exact = lorentzian_pv(a, wc, k)
        tail = (k / (2.0 * math.pi)) / (1e4 * max(wc, a)) ** 2  # integrand ~ kappa / (pi x^3)
        worst = max(worst, abs(r.value + tail - exact) / abs(exact))
    return worst < 1e-8, f"max rel error {worst:.2g}"


def _check_closed_vs_quadrature():
    worst = 0.0
    for w0 in (1e6, 1e8, 1e10):
        for ratio in (0.3, 0.9, 1.01, 3.0):
            for q in (1e3, 1e5, 1e8):
                atom, dc, sd, _ = _system(omega0=w0, omega_c=w0 * ratio, q_factor=q, volume=1e-6, eta=1.0)
                c = ls.delta0_closed(atom, dc, sd)
                d = ls.delta0_quadrature(atom, dc, sd)
                worst = max(worst, abs(c - d) / abs(d))
    return worst < 1e-6, f"max rel diff {worst:.2g} over 36 points"


def _check_oracle():
    worst = 0.0
    for ratio in (0.5, 0.999, 1.0, 1.2):
        atom, dc, sd, _ = _system(omega0=1e7, omega_c=1e7 * ratio, q_factor=1e4, volume=1e-6, eta=1.0)
        o = delta0_oracle(1e7, sd.omega_c, sd.kappa, 1.0)
        worst = max(worst, abs(ls.delta0_quadrature(atom, dc, sd) - o) / abs(o))
    return worst < 1e-6, f"quadrature vs complex-log oracle, max rel {worst:.2g}"


def _check_highq(highq):
    worst = 0.0
    for ratio in (0.5, 1.5, 2.0):
        atom, dc, sd, _ = _system(omega0=1e7, omega_c=1e7 * ratio, q_factor=1e7, volume=1e-5, eta=1e-9)
        c = ls.delta0_closed(atom, dc, sd)
        worst = max(worst, abs(highq(atom, dc, sd) - c) / abs(c))
    return worst < 1e-5, f"max rel diff {worst:.2g} at Q=1e7"


def _fig2a():
    from .sweep import _omega0_bar

    omega = 5e9
    return _system(omega0=1e7, omega_c=omega + _omega0_bar(omega), q_factor=1e7, volume=1e-8, eta=1e-6,
                   omega=omega, radius=1e-5)


def _check_slopes():
    atom, dc, sd, tr = _fig2a()
    fs = ls.appendix_integrands(tr, sd)
    base = tr.omega + tr.omega0_bar
    s = {k: slope_probe(fs[k], 1e3 * base, 1e5 * base) for k in ("f1a", "f1b", "i1")}
    ok = abs(s["f1a"] + 1) <= 0.05 and abs(s["f1b"] + 1) <= 0.05 and s["i1"] <= -1.9
    return ok, ", ".join(f"{k} {v:.3f}" for k, v in s.items())


def _check_tail():
    atom, dc, sd, tr = _fig2a()
    cut = 1e3 * (tr.omega + tr.omega0_bar)
    f = ls.total_integrand(tr, sd)
    b = tail_bound(f, cut)
    s = slope_probe(f, cut, 4 * cut, n_points=3)
    return math.isfinite(b) and abs(s + 3) < 0.1, f"bound {b:.3g}, slope {s:.3f}"


def _check_static_limit():
    atom, dc, sd, tr = _system(omega0=1e7, omega_c=1.3e7, q_factor=1e6, volume=1e-5, eta=1e-9)
    a = ls.delta_total(atom, dc, sd, tr)
    b = ls.delta0_quadrature(atom, dc, sd)
    return a == b, f"delta_total(omega=0) - delta0_quadrature = {a - b:.3g}"


def run_selfcheck(highq: Callable = ls.delta0_highq) -> list[Check]:
    suite = [
        ("pv_odd_identity", _check_pv_odd),
        ("polynomial_exactness", _check_polynomial),
        ("lorentzian_pv_closed_form", _check_lorentzian),
        ("quadrature_vs_oracle", _check_oracle),
        ("closed_form_vs_quadrature", _check_closed_vs_quadrature),
        ("highq_vs_closed_form", lambda: _check_highq(highq)),
        ("static_limit", _check_static_limit),
        ("tail_slopes", _check_slopes),
        ("tail_bound_fig2a", _check_tail),
    ]
    out = []
    for name, fn in suite:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(Check(name, bool(ok), detail, time.perf_counter() - t0))
    return out


def format_table(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  {c.detail}" for c in checks]
    n = sum(c.passed for c in checks)
    lines.append(f"{n}/{len(checks)} checks passed")
    return "\n".join(lines)


if __name__ == "__main__":
    print(format_table(run_selfcheck()))

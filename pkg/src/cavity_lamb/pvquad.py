"""Adaptive Cauchy principal-value quadrature.

Supports are unions of intervals (the last may extend to +inf) with any
number of simple poles inside.  Each interior pole ``p`` gets a symmetric
window ``[p-h, p+h]`` that is folded onto ``t in [0, h]``::

    PV int_{p-h}^{p+h} g(x) dx = int_0^h [g(p+t) + g(p-t)] dt

which is the subtraction ``f(x)/(x-p) = (f(x)-f(p))/(x-p) + f(p)/(x-p)``
with the odd second part already cancelled.  Everything else is covered by
globally adaptive bisection with the 7/15-point Gauss-Kronrod pair.

Integrands must be vectorised: they receive a 1-D float array and return an
array of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Integrand = Callable[[np.ndarray], np.ndarray]

EPS = np.finfo(float).eps
MAX_PANELS = 10_000
POLE_MERGE_REL = 1e-9
WINDOW_WIDTHS = 10.0

# 15-point Kronrod extension of the 7-point Gauss rule (abscissae > 0, then 0).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]


class PVError(RuntimeError):
    """Base class for quadrature failures."""


class NonConvergence(PVError):
    def __init__(self, message: str, partial: "PVResult | None" = None):
        super().__init__(message)
        self.partial = partial


class PoleOnEdge(PVError):
    pass


class ModelMismatch(PVError):
    pass


class SignChange(PVError):
    pass


@dataclass(frozen=True)
class PVProblem:
    """A principal-value integral over a union of intervals.

    ``width_scale`` is the narrowest structure the integrand is known to
    have near a pole (the Lorentzian half-width for cavity integrands); it
    caps the folding window at ``WINDOW_WIDTHS * width_scale`` and sets the
    pole/edge merge distance.  ``breakpoints`` are hints where the integrand
    has kinks or sharp features.
    """

    integrand: Integrand
    support: Sequence[tuple[float, float]]
    poles: Sequence[float] = ()
    abs_tol: float = 0.0
    rel_tol: float = 1e-8
    tail_cut: float | None = None
    breakpoints: Sequence[float] = ()
    width_scale: float | None = None
    tail_decay: int | None = None
    max_panels: int = MAX_PANELS


@dataclass(frozen=True)
class PVResult:
    value: float
    err_estimate: float
    subdivisions: int
    tail_bound: float = 0.0
    tail_slope: float | None = None
    roundoff_limited: bool = False
    windows: tuple = field(default=(), repr=False)

    @property
    def total_error(self) -> float:
        return self.err_estimate + self.tail_bound


def pole_merge_distance(pole: float, width_scale: float | None = None) -> float:
    scale = max(abs(pole), width_scale or 0.0)
    return POLE_MERGE_REL * scale if scale > 0 else np.finfo(float).tiny


# --- tails and slopes ------------------------------------------------------

def slope_probe(f: Integrand, x_lo: float, x_hi: float, n_points: int = 9) -> float:
    """Least-squares slope of log|f| against log x on a geometric grid."""
    if not 0 < x_lo < x_hi:
        raise ValueError("need 0 < x_lo < x_hi")
    x = np.geomspace(x_lo, x_hi, n_points)
    y = np.asarray(f(x), dtype=float)
    signs = np.sign(y)
    if np.any(signs == 0) or np.any(signs != signs[0]):
        raise SignChange(f"integrand changes sign or vanishes on [{x_lo:g}, {x_hi:g}]")
    return float(np.polyfit(np.log(x), np.log(np.abs(y)), 1)[0])


def _tail_fit(f: Integrand, cut: float, decay_model: int | None):
    x = cut * np.array([1.0, 2.0, 4.0])
    y = np.abs(np.asarray(f(x), dtype=float))
    if not np.all(np.isfinite(y)):
        return math.inf, None, decay_model
    nz = y > 0
    if not nz.any():
        return 0.0, None, decay_model
    slope = None
    if nz.sum() >= 2:
        slope = float(np.polyfit(np.log(x[nz]), np.log(y[nz]), 1)[0])
    if decay_model is None:
        if slope is None or slope > -1.5:
            n = 1
        elif slope > -2.5:
            n = 2
        else:
            n = 3
    else:
        n = int(decay_model)
        if n not in (1, 2, 3):
            raise ValueError("decay_model must be 1, 2 or 3 (for 1/x, 1/x^2, 1/x^3)")
        if slope is not None and abs(slope + n) > 0.5:
            raise ModelMismatch(
                f"tail slope {slope:.3f} does not match 1/x^{n} model at cut {cut:g}"
            )
    if n == 1:
        return math.inf, slope, n
    envelope = float(np.max(y * x**n))
    return envelope * cut ** (1 - n) / (n - 1), slope, n


def tail_bound(f: Integrand, cut: float, decay_model: int | None = None) -> float:
    """Integrated magnitude of a power-law envelope of ``f`` beyond ``cut``.

    ``decay_model`` is the exponent n of a ``1/x^n`` envelope fitted to
    ``|f|`` at ``cut, 2 cut, 4 cut``; ``None`` picks it from the measured
    slope.  A ``1/x`` envelope gives an infinite bound.
    """
    return _tail_fit(f, cut, decay_model)[0]


# --- panel machinery -------------------------------------------------------

def _merge_support(support, tol_rel=1e-15):
    intervals = sorted((float(a), float(b)) for a, b in support)
    if not intervals:
        raise ValueError("empty support")
    for a, b in intervals:
        if not a < b:
            raise ValueError(f"bad interval ({a}, {b})")
        if math.isinf(a):
            raise ValueError("left-infinite intervals are not supported")
    comps: list[list[float]] = []
    junctions: list[float] = []
    for a, b in intervals:
        if comps:
            last = comps[-1]
            tol = tol_rel * max(abs(last[1]), abs(a), 1.0)
            if a <= last[1] + tol:
                if a >= last[1] - tol:
                    junctions.append(last[1])
                last[1] = max(last[1], b)
                continue
        comps.append([a, b])
    return [tuple(c) for c in comps], junctions


def _geometric_grading(center, h, lo, hi):
    pts = []
    step = h * 10.0
    while center + step < hi:
        pts.append(center + step)
        step *= 10.0
    step = h * 10.0
    while center - step > lo:
        pts.append(center - step)
        step *= 10.0
    return pts


def _layout(p: PVProblem):
    """Split the problem into plain panels and folded pole windows."""
    comps, junctions = _merge_support(p.support)
    hints = [float(b) for b in p.breakpoints] + junctions
    poles = sorted({float(q) for q in p.poles})

    plain: list[tuple[float, float]] = []
    folded: list[tuple[float, float, float]] = []
    windows = []
    tails = []

    for a, b in comps:
        is_tail = math.isinf(b)
        if is_tail:
            if p.tail_cut is None:
                raise ValueError("tail_cut is required for a right-infinite support")
            b = float(p.tail_cut)
            if b <= a:
                raise ValueError(f"tail_cut {b:g} is not beyond the support start {a:g}")
            if any(q >= b for q in poles):
                raise ValueError("tail_cut must lie beyond every pole")
            tails.append(b)
        for q in poles:
            md = pole_merge_distance(q, p.width_scale)
            if abs(q - a) <= md or abs(q - b) <= md:
                raise PoleOnEdge(f"pole {q:.17g} sits on support endpoint of [{a:g}, {b:g}]")
        inner = [q for q in poles if a < q < b]

        cuts = {a, b}
        wins = []
        for i, q in enumerate(inner):
            neighbours = [a, b] + inner[:i] + inner[i + 1:]
            d = min(abs(q - n) for n in neighbours)
            width = d
            if p.width_scale:
                width = min(d, WINDOW_WIDTHS * p.width_scale)
            h = width / 2.0
            wins.append((q, h))
            cuts.update((q - h, q + h))
            cuts.update(_geometric_grading(q, h, a, b))
        feats = [x for x in hints if a < x < b]
        cuts.update(feats)
        if is_tail:
            start = max([a] + [abs(x) for x in feats] + [abs(q) for q in inner])
            x = max(start, 1e-300) * 10.0
            while x < b:
                cuts.add(x)
                x *= 10.0

        def in_window(x):
            return any(q - h < x < q + h for q, h in wins)

        pts = sorted(x for x in cuts if a <= x <= b and not in_window(x))
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi > lo and not any(lo >= q - h and hi <= q + h for q, h in wins):
                plain.append((lo, hi))
        for q, h in wins:
            # Features within the merge distance would only create panels
            # whose nodes round onto the pole.
            md = pole_merge_distance(q, p.width_scale)
            ts = sorted({abs(x - q) for x in feats if md < abs(x - q) < h} | {0.0, h})
            for lo, hi in zip(ts[:-1], ts[1:]):
                if hi > lo:
                    folded.append((q, lo, hi))
        windows.extend(wins)
    return plain, folded, windows, tails


def _evaluate(f: Integrand, a, b, pole):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * NODES
    vals = np.empty_like(x)
    mags = np.empty_like(x)
    plain = np.isnan(pole)
    if plain.any():
        xp = x[plain]
        vals[plain] = np.asarray(f(xp.ravel()), dtype=float).reshape(xp.shape)
        mags[plain] = np.abs(vals[plain])
    if (~plain).any():
        t = x[~plain]
        q = pole[~plain][:, None]
        # Snap the offset to the ulp grid at |q| + t so q +- ts are both exact;
        # otherwise rounding is amplified by the 1/t pole.
        u = np.spacing(np.abs(q) + t)
        ts = np.round(t / u) * u
        up = np.asarray(f((q + ts).ravel()), dtype=float).reshape(t.shape)
        down = np.asarray(f((q - ts).ravel()), dtype=float).reshape(t.shape)
        vals[~plain] = up + down
        mags[~plain] = np.abs(up) + np.abs(down)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise PVError(f"integrand is not finite near x = {x[tuple(bad)]:.17g}")
    resk = vals @ KRONROD_WEIGHTS
    resg = vals @ GAUSS_WEIGHTS
    resasc = np.abs(vals - 0.5 * resk[:, None]) @ KRONROD_WEIGHTS * half
    value = resk * half
    err = np.abs((resk - resg) * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    # Folded panels cancel two large terms; the floor must see their size.
    floor = 50.0 * EPS * (mags @ KRONROD_WEIGHTS) * half
    return value, np.maximum(err, floor), floor


def pv_integrate(p: PVProblem) -> PVResult:
    """Principal-value integral of ``p.integrand`` over ``p.support``.

    The tail beyond ``tail_cut`` is not added to ``value``; its magnitude
    is reported as ``tail_bound``.
    """
    plain, folded, windows, tails = _layout(p)
    a = np.array([x[0] for x in plain] + [x[1] for x in folded], dtype=float)
    b = np.array([x[1] for x in plain] + [x[2] for x in folded], dtype=float)
    pole = np.array([np.nan] * len(plain) + [x[0] for x in folded], dtype=float)
    if a.size == 0:
        raise ValueError("nothing to integrate")

    val, err, floor = _evaluate(p.integrand, a, b, pole)
    roundoff_limited = False
    while True:
        total = float(val.sum())
        err_tot = float(err.sum())
        floor_tot = float(floor.sum())
        target = max(p.abs_tol, p.rel_tol * abs(total))
        if err_tot <= target:
            break
        if err_tot <= 2.0 * floor_tot:
            roundoff_limited = True
            break
        # Folded panels stop well before pole + t rounds back onto the pole.
        loc = np.where(
            np.isnan(pole), 64.0 * np.maximum(np.abs(a), np.abs(b)), 2048.0 * (np.abs(pole) + np.abs(b))
        )
        splittable = (b - a) > EPS * np.maximum(loc, np.finfo(float).tiny)
        if not splittable.any():
            raise NonConvergence(
                "panels reached floating-point resolution",
                PVResult(total, err_tot, a.size, windows=tuple(windows)),
            )
        order = np.argsort(-np.where(splittable, err, -1.0), kind="stable")
        order = order[splittable[order]]
        cum = np.cumsum(err[order])
        need = err_tot - 0.5 * target
        k = min(int(np.searchsorted(cum, need)) + 1, order.size)
        pick = order[:k]
        if a.size + pick.size > p.max_panels:
            w = int(np.argmax(err))
            where = f"[{a[w]:.17g}, {b[w]:.17g}]"
            if not np.isnan(pole[w]):
                where = f"pole {pole[w]:.17g} offsets {where}"
            raise NonConvergence(
                f"subdivision budget of {p.max_panels} panels exhausted "
                f"(error {err_tot:.3g}, target {target:.3g}; worst panel {where}, "
                f"error {err[w]:.3g})",
                PVResult(total, err_tot, a.size, windows=tuple(windows)),
            )
        keep = np.ones(a.size, dtype=bool)
        keep[pick] = False
        pa, pb, pp = a[pick], b[pick], pole[pick]
        pm = 0.5 * (pa + pb)
        na = np.concatenate([pa, pm])
        nb = np.concatenate([pm, pb])
        npole = np.concatenate([pp, pp])
        nval, nerr, nfloor = _evaluate(p.integrand, na, nb, npole)
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        pole = np.concatenate([pole[keep], npole])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])
        floor = np.concatenate([floor[keep], nfloor])

    # Sum in a fixed order so results do not depend on refinement history.
    order = np.lexsort((np.nan_to_num(pole, nan=-np.inf), a))
    total = math.fsum(val[order])
    tb, slope = 0.0, None
    for cut in tails:
        bound, slope, _ = _tail_fit(p.integrand, cut, p.tail_decay)
        tb += bound
    return PVResult(
        value=total,
        err_estimate=float(err.sum()),
        subdivisions=int(a.size),
        tail_bound=tb,
        tail_slope=slope,
        roundoff_limited=roundoff_limited,
        windows=tuple(windows),
    )


def integrate(f: Integrand, a: float, b: float, **kwargs) -> PVResult:
    """Ordinary adaptive integral of ``f`` over ``[a, b]`` (no poles)."""
    return pv_integrate(PVProblem(f, [(a, b)], **kwargs))

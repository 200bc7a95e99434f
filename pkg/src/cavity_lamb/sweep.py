"""Parameter scans, extremum finding and table output.

Each grid point is an independent evaluation, so sweeps fan out over a
process pool; rows come back in grid order and are bit-identical to a
serial run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .lambshift import DEFAULT_REL_TOL, delta0_used, delta_noninertial
from .params import (
    CONFIG_KEYS,
    DEFAULT_MARGIN,
    as_dict,
    build_params,
    check_bad_cavity,
    derive_cavity,
    derive_trajectory,
)
from .spectral import SpectralDensity, gamma0, gamma_noninertial

QUANTITIES = ("delta0", "delta_total", "delta_noninertial", "gamma0", "gamma_noninertial")
AXES = ("omega_c", "omega")
SPACINGS = ("linear", "log", "offset")
EXTRAS = ("over_eta", "ratio")
THREADS_ENV = "CAVITY_LAMB_THREADS"


class NoExtremum(ValueError):
    """The sampled curve is monotone."""


@dataclass(frozen=True)
class SweepSpec:
    """A 1-D scan.

    In ``offset`` spacing ``start``/``stop`` are offsets and the axis value
    is ``center + offset * scale``.  ``extras`` adds η-normalised columns
    (``over_eta``) and the Δω/Δ0 ratio (``ratio``).
    """

    axis: str
    start: float
    stop: float
    fixed: Mapping[str, float]
    points: int = 401
    spacing: str = "linear"
    quantities: tuple[str, ...] = QUANTITIES
    center: float | None = None
    scale: float = 1.0
    extras: tuple[str, ...] = ()
    tol: float = DEFAULT_REL_TOL
    margin: float = DEFAULT_MARGIN
    workers: int | None = None
    name: str | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.spacing not in SPACINGS:
            raise ValueError(f"spacing must be one of {SPACINGS}, got {self.spacing!r}")
        if not self.start < self.stop:
            raise ValueError("start must be below stop")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError("points must be an integer >= 2")
        bad = [q for q in self.quantities if q not in QUANTITIES]
        if bad:
            raise ValueError(f"unknown quantities {bad}; choose from {QUANTITIES}")
        bad = [e for e in self.extras if e not in EXTRAS]
        if bad:
            raise ValueError(f"unknown extras {bad}; choose from {EXTRAS}")
        if "ratio" in self.extras and not {"delta0", "delta_noninertial"} <= set(self.quantities):
            raise ValueError("the ratio column needs delta0 and delta_noninertial")
        if self.spacing == "offset":
            if self.center is None:
                raise ValueError("offset spacing needs a center")
        elif self.spacing == "log" and self.start <= 0:
            raise ValueError("log spacing needs a positive start")
        unknown = [k for k in self.fixed if k not in CONFIG_KEYS]
        if unknown:
            raise ValueError(f"unknown fixed parameters {unknown}")

    def offsets(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, int(self.points))
        return np.linspace(self.start, self.stop, int(self.points))

    def grid(self) -> np.ndarray:
        g = self.offsets()
        if self.spacing == "offset":
            g = self.center + g * self.scale
        if not np.all(np.diff(g) > 0):
            raise ValueError("grid is not strictly increasing (scale too small for center?)")
        return g

    def columns(self) -> list[str]:
        cols = [self.axis]
        if self.spacing == "offset":
            cols.append("offset")
        cols += list(self.quantities)
        if "over_eta" in self.extras:
            cols += [f"{q}_over_eta" for q in self.quantities]
        if "ratio" in self.extras:
            cols.append("ratio_noninertial")
        cols += [f"err_{q}" for q in self.quantities]
        return cols


@dataclass
class SweepRow:
    axis_value: float
    values: dict[str, float]
    errors: dict[str, float]
    derived: dict[str, float] = field(default_factory=dict)
    bad_cavity: bool = False
    failure: str | None = None

    def as_record(self, columns: Sequence[str]) -> dict[str, float]:
        flat = {columns[0]: self.axis_value, **self.derived, **self.values}
        flat.update({f"err_{k}": v for k, v in self.errors.items()})
        return {c: flat[c] for c in columns}


# --- evaluation ------------------------------------------------------------

def evaluate_point(values: Mapping[str, float], quantities, tol=DEFAULT_REL_TOL, margin=DEFAULT_MARGIN):
    """Evaluate the requested quantities at one parameter point.

    Returns ``(values, errors, eta, bad_cavity)``.
    """
    atom, cavity, traj_in = build_params(values)
    dc = derive_cavity(atom, cavity)
    sd = SpectralDensity.from_cavity(dc)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = derive_trajectory(atom, traj_in)
    bad = not check_bad_cavity(dc, margin).passed
    out: dict[str, float] = {}
    err: dict[str, float] = {}
    if {"delta_total", "delta_noninertial"} & set(quantities):
        r = delta_noninertial(atom, dc, sd, traj, tol)
        out.update(delta0=r.delta0, delta_total=r.delta_total, delta_noninertial=r.delta_noninertial)
        err.update(delta0=r.delta0_err, delta_total=r.delta_total_err, delta_noninertial=r.err_estimate)
    elif "delta0" in quantities:
        d0, d0_err, _, _ = delta0_used(atom, dc, sd, tol)
        out["delta0"], err["delta0"] = d0, d0_err
    if "gamma0" in quantities:
        out["gamma0"], err["gamma0"] = gamma0(atom, dc, sd), 0.0
    if "gamma_noninertial" in quantities:
        out["gamma_noninertial"] = gamma_noninertial(atom, traj, dc, sd)
        err["gamma_noninertial"] = 0.0
    keep = list(quantities)
    return {q: out[q] for q in keep}, {q: err[q] for q in keep}, dc.eta, bad


def _row_task(args) -> SweepRow:
    spec, x, offset = args
    values = dict(spec.fixed)
    values[spec.axis] = float(x)
    derived: dict[str, float] = {}
    if offset is not None:
        derived["offset"] = float(offset)
    try:
        vals, errs, eta, bad = evaluate_point(values, spec.quantities, spec.tol, spec.margin)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        nan = {q: math.nan for q in spec.quantities}
        for c in spec.columns():
            if c not in nan and c != spec.axis and not c.startswith("err_"):
                derived.setdefault(c, math.nan)
        return SweepRow(float(x), nan, dict(nan), derived, False, f"{type(exc).__name__}: {exc}")
    if "over_eta" in spec.extras:
        derived.update({f"{q}_over_eta": v / eta for q, v in vals.items()})
    if "ratio" in spec.extras:
        d0 = vals["delta0"]
        derived["ratio_noninertial"] = vals["delta_noninertial"] / d0 if d0 != 0 else math.nan
    return SweepRow(float(x), vals, errs, derived, bad, None)


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, n)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    grid = spec.grid()
    offsets = spec.offsets() if spec.spacing == "offset" else [None] * grid.size
    tasks = [(spec, x, o) for x, o in zip(grid, offsets)]
    n = worker_count(workers if workers is not None else spec.workers)
    if n == 1 or len(tasks) < 8:
        return [_row_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * n))
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_row_task, tasks, chunksize=chunk))


# --- extrema ---------------------------------------------------------------

@dataclass(frozen=True)
class Extrema:
    argmax: float
    max: float
    argmin: float
    min: float
    zero_crossings: tuple[float, ...]


def _parabola(x, y, i):
    if i == 0 or i == len(x) - 1:
        return x[i], y[i]
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    d0, d2 = x0 - x1, x2 - x1
    den = d0 * d2 * (d0 - d2)
    if den == 0:
        return x1, y1
    a = ((y0 - y1) * d2 - (y2 - y1) * d0) / den
    b = ((y2 - y1) * d0 * d0 - (y0 - y1) * d2 * d2) / den
    if a == 0:
        return x1, y1
    t = -b / (2.0 * a)
    if not min(d0, 0.0) <= t <= max(d2, 0.0):
        return x1, y1
    return x1 + t, y1 + b * t / 2.0


def find_extrema(rows: Sequence[SweepRow], quantity: str, absolute: bool = False) -> Extrema:
    """Grid extrema with 3-point parabolic refinement and zero crossings."""
    pts = [(r.axis_value, r.values[quantity]) for r in rows if math.isfinite(r.values.get(quantity, math.nan))]
    if len(pts) < 3:
        raise ValueError("need at least 3 finite rows")
    x = np.array([p[0] for p in pts])
    raw = np.array([p[1] for p in pts])
    y = np.abs(raw) if absolute else raw
    dy = np.diff(y)
    if np.all(dy >= 0) or np.all(dy <= 0):
        raise NoExtremum(f"{quantity} is monotone over the scan")
    imax, imin = int(np.argmax(y)), int(np.argmin(y))
    xmax, ymax = _parabola(x, y, imax)
    xmin, ymin = _parabola(x, y, imin)
    s = np.sign(raw)
    zeros = []
    for i in range(len(raw) - 1):
        if raw[i] == 0:
            zeros.append(float(x[i]))
        elif s[i] * s[i + 1] < 0:
            zeros.append(float(x[i] - raw[i] * (x[i + 1] - x[i]) / (raw[i + 1] - raw[i])))
    if raw[-1] == 0:
        zeros.append(float(x[-1]))
    return Extrema(float(xmax), float(ymax), float(xmin), float(ymin), tuple(zeros))


# --- output ----------------------------------------------------------------

def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else format(v, ".17g")


def _columns(rows, quantities, axis):
    if quantities is not None and not quantities:
        return [axis], []
    if not rows:
        return [axis], []
    r = rows[0]
    qs = list(r.values) if quantities is None else list(quantities)
    return [axis, *r.derived.keys(), *qs, *(f"err_{q}" for q in qs)], rows


def render_table(rows: Sequence[SweepRow], fmt: str = "csv", axis: str = "omega_c", quantities=None, columns=None) -> str:
    if columns is None:
        columns, body = _columns(rows, quantities, axis)
    else:
        body = rows
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in body:
            rec = r.as_record(columns)
            w.writerow([_fmt(rec[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        recs = [
            {c: (None if math.isnan(v) else v) for c, v in r.as_record(columns).items()}
            for r in body
        ]
        return json.dumps(recs, indent=1, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def atomic_write(path: str | Path, text: str) -> None:
    """Write to a temporary file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def meta_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def sweep_metadata(spec: SweepSpec, rows: Sequence[SweepRow]) -> dict:
    values = dict(spec.fixed)
    if spec.spacing == "offset":
        values.setdefault(spec.axis, spec.center)
    else:
        values.setdefault(spec.axis, spec.start)
    derived = {}
    try:
        atom, cavity, traj = build_params(values)
        dc = derive_cavity(atom, cavity)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dt = derive_trajectory(atom, traj)
        derived = {"dipole": atom.dipole, **as_dict(dc), **as_dict(dt)}
        derived["reference_point"] = {spec.axis: values[spec.axis]}
    except ValueError as exc:
        derived = {"error": str(exc)}
    spec_d = asdict(spec)
    spec_d["fixed"] = dict(spec.fixed)
    spec_d.pop("workers", None)
    flags = [
        {"index": i, spec.axis: r.axis_value, "bad_cavity": r.bad_cavity, "failure": r.failure}
        for i, r in enumerate(rows)
        if r.bad_cavity or r.failure
    ]
    return {
        "tool": "cavity_lamb",
        "version": __version__,
        "spec": spec_d,
        "derived": derived,
        "tolerances": {"rel_tol": spec.tol, "bad_cavity_margin": spec.margin},
        "flagged_rows": flags,
    }


def emit_table(
    rows: Sequence[SweepRow],
    fmt: str,
    destination: str | Path,
    spec: SweepSpec | None = None,
    quantities=None,
) -> Path:
    """Write rows as CSV or JSON; with a spec, also write the metadata sidecar."""
    destination = Path(destination)
    if not destination.parent.is_dir():
        raise OSError(f"destination directory {destination.parent} does not exist")
    columns = None
    if spec is not None and quantities is None:
        columns = spec.columns()
    text = render_table(rows, fmt, spec.axis if spec else "omega_c", quantities, columns)
    atomic_write(destination, text)
    if spec is not None:
        meta = json.dumps(sweep_metadata(spec, rows), indent=1, sort_keys=True, allow_nan=False, default=str)
        atomic_write(meta_path(destination), meta + "\n")
    return destination


def parse_csv(text: str) -> list[dict[str, float]]:
    rdr = csv.DictReader(io.StringIO(text))
    return [{k: float(v) for k, v in rec.items()} for rec in rdr]


# --- figure presets --------------------------------------------------------

OMEGA0 = 1e7
RADIUS = 1e-5


def _omega0_bar(omega: float, radius: float = RADIUS, omega0: float = OMEGA0) -> float:
    atom, _, traj = build_params(
        {"omega0": omega0, "eta": 1.0, "omega_c": 1.0, "q_factor": 1.0, "volume": 1.0, "omega": omega, "radius": radius}
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return derive_trajectory(atom, traj).omega0_bar


def _inertial(name, quantities, points, tol):
    fixed = {"omega0": OMEGA0, "q_factor": 1e7, "volume": 1e-5, "eta": 1e-9}
    kappa = OMEGA0 / 1e7
    return SweepSpec(
        axis="omega_c", start=-10.0, stop=10.0, fixed=fixed, points=points, spacing="offset",
        quantities=quantities, center=OMEGA0, scale=kappa, extras=("over_eta",), tol=tol, name=name,
    )


def _orbital(name, omega, volume, eta, half_range, quantities, extras, points, tol, lab_center=False):
    fixed = {"omega0": OMEGA0, "q_factor": 1e7, "volume": volume, "eta": eta, "omega": omega, "radius": RADIUS}
    center = omega + (OMEGA0 if lab_center else _omega0_bar(omega))
    return SweepSpec(
        axis="omega_c", start=-half_range, stop=half_range, fixed=fixed, points=points, spacing="offset",
        quantities=quantities, center=center, scale=1e5, extras=extras, tol=tol, name=name,
    )


_SHIFTS = ("delta0", "delta_total", "delta_noninertial")

FIGURES = {
    "fig1a": lambda n, t: _inertial("fig1a", ("delta0",), n, t),
    "fig1b": lambda n, t: _orbital("fig1b", 5e11, 1e-9, 1e-5, 10.0, _SHIFTS, ("over_eta",), n, t),
    "fig2a": lambda n, t: _orbital("fig2a", 5e9, 1e-8, 1e-6, 0.1, _SHIFTS, ("over_eta",), n, t),
    "fig2b": lambda n, t: _orbital("fig2b", 5e9, 1e-8, 1e-6, 0.1, _SHIFTS, ("over_eta", "ratio"), n, t),
    "fig2c": lambda n, t: _orbital("fig2c", 5e10, 1e-8, 1e-6, 1.0, _SHIFTS, ("over_eta",), n, t),
    "fig2d": lambda n, t: _orbital("fig2d", 5e10, 1e-8, 1e-6, 1.0, _SHIFTS, ("over_eta", "ratio"), n, t),
    "fig3a": lambda n, t: _inertial("fig3a", ("gamma0", "delta0"), n, t),
    "fig3b": lambda n, t: _orbital(
        "fig3b", 5e10, 1e-8, 1e-6, 1.0, ("gamma_noninertial", "delta_noninertial"), ("over_eta",), n, t,
        lab_center=True,
    ),
}


class UnknownFigure(KeyError):
    pass


def figure_spec(name: str, points: int = 401, tol: float = DEFAULT_REL_TOL) -> SweepSpec:
    try:
        build = FIGURES[name]
    except KeyError:
        raise UnknownFigure(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}") from None
    return build(points, tol)

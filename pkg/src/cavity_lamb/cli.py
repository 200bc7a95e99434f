"""Command-line interface.

Exit codes: 0 success, 1 self-check failure, 2 parse/usage error,
3 physics-validity rejection, 4 quadrature failure, 5 unknown figure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

from . import __version__
from .lambshift import DEFAULT_REL_TOL, delta0_quadrature, delta_noninertial
from .params import (
    CONFIG_KEYS,
    DEFAULT_MARGIN,
    ConfigError,
    FirstOrderWarning,
    ParameterError,
    as_dict,
    build_params,
    check_bad_cavity,
    derive_cavity,
    derive_trajectory,
    load_config,
)
from .pvquad import PVError
from .spectral import SpectralDensity, gamma0, gamma_noninertial
from .sweep import (
    AXES,
    QUANTITIES,
    SPACINGS,
    SweepSpec,
    UnknownFigure,
    emit_table,
    figure_spec,
    render_table,
    run_sweep,
)

EXIT_OK, EXIT_SELFCHECK, EXIT_PARSE, EXIT_VALIDITY, EXIT_QUADRATURE, EXIT_FIGURE = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _clean(obj):
    """Make a structure JSON-safe (non-finite floats become null)."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key = value parameter file")
    g = p.add_argument_group("parameter overrides (SI units; win over --config)")
    for key in CONFIG_KEYS:
        flags = [f"--{key}"]
        if "_" in key:
            flags.insert(0, f"--{key.replace('_', '-')}")
        g.add_argument(*flags, dest=key, type=float, metavar="X", default=None)


def _add_common(p: argparse.ArgumentParser, tol=True, margin=True) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable output")
    if tol:
        p.add_argument("--tol", type=float, default=DEFAULT_REL_TOL, help="relative quadrature tolerance")
    if margin:
        p.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="bad-cavity margin (g * margin <= kappa)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavity-lamb", description="Lamb shifts of a circulating two-level atom in a lossy cavity."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shift", help="evaluate all shifts and decay rates at one point")
    _add_param_flags(p)
    _add_common(p)
    p.add_argument("--allow-bad-cavity", action="store_true", help="evaluate even if g is not << kappa")

    p = sub.add_parser("sweep", help="scan omega_c or omega")
    _add_param_flags(p)
    _add_common(p)
    p.add_argument("--axis", choices=AXES, default="omega_c")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--spacing", choices=SPACINGS, default="linear")
    p.add_argument("--center", type=float, help="offset spacing: axis = center + offset * scale")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--quantities", default=",".join(QUANTITIES), help="comma-separated subset of " + ", ".join(QUANTITIES))
    p.add_argument("--normalize", action="store_true", help="add Delta/eta columns")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--out", metavar="FILE", help="output file (stdout if omitted)")

    p = sub.add_parser("figure", help="regenerate a figure's dataset")
    p.add_argument("name", help="fig1a, fig1b, fig2a..fig2d, fig3a, fig3b")
    p.add_argument("--out", metavar="DIR", default=".")
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_common(p, margin=False)

    p = sub.add_parser("validate", help="check the bad-cavity and first-order conditions")
    _add_param_flags(p)
    _add_common(p, tol=False)

    p = sub.add_parser("selfcheck", help="run the built-in oracle suite")
    p.add_argument("--json", action="store_true")
    return parser


def _gather(args) -> dict[str, float]:
    values: dict[str, float] = {}
    if args.config:
        values.update(load_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if "dipole" in values and "eta" in values:
        # An override of one replaces the other from the file.
        if getattr(args, "eta", None) is not None and getattr(args, "dipole", None) is None:
            values.pop("dipole")
        elif getattr(args, "dipole", None) is not None and getattr(args, "eta", None) is None:
            values.pop("eta")
    return values


def _system(values):
    atom, cavity, traj = build_params(values)
    dc = derive_cavity(atom, cavity)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FirstOrderWarning)
        tr = derive_trajectory(atom, traj)
    notes = [str(w.message) for w in caught]
    return atom, dc, SpectralDensity.from_cavity(dc), tr, notes


def cmd_shift(args) -> int:
    atom, dc, sd, tr, notes = _system(_gather(args))
    report = check_bad_cavity(dc, args.margin)
    if not report.passed and not args.allow_bad_cavity:
        raise CliError(f"{report}; use --allow-bad-cavity to evaluate anyway", EXIT_VALIDITY)
    r = delta_noninertial(atom, dc, sd, tr, args.tol)
    d0q, d0q_err, _ = delta0_quadrature(atom, dc, sd, args.tol, full_output=True)
    out = {
        "delta0_closed": r.delta0_closed,
        "delta0_highq": r.delta0_highq,
        "delta0_quadrature": d0q,
        "delta0": r.delta0,
        "delta_total": r.delta_total,
        "delta_noninertial": r.delta_noninertial,
        "err_estimate": r.err_estimate,
        "errors": {"delta0": r.delta0_err, "delta0_quadrature": d0q_err, "delta_total": r.delta_total_err},
        "gamma0": gamma0(atom, dc, sd),
        "gamma_noninertial": gamma_noninertial(atom, tr, dc, sd),
        "bad_cavity": {"passed": report.passed, "g_over_kappa": report.ratio, "margin": report.margin},
        "derived": {"dipole": atom.dipole, **as_dict(dc), **as_dict(tr)},
        "method_trace": r.method_trace,
        "notes": notes,
    }
    print(_dump(out))
    return EXIT_OK


def cmd_sweep(args) -> int:
    quantities = tuple(q for q in (s.strip() for s in args.quantities.split(",")) if q)
    fixed = _gather(args)
    fixed.pop(args.axis, None)
    try:
        spec = SweepSpec(
            axis=args.axis, start=args.start, stop=args.stop, fixed=fixed, points=args.points,
            spacing=args.spacing, quantities=quantities, center=args.center, scale=args.scale,
            extras=("over_eta",) if args.normalize else (), tol=args.tol, margin=args.margin,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    # Fail fast on bad fixed parameters rather than flagging every row.
    probe = dict(fixed)
    probe[args.axis] = spec.grid()[0]
    _system(probe)
    rows = run_sweep(spec)
    fmt = args.format or ("json" if (args.json or (args.out and args.out.endswith(".json"))) else "csv")
    if args.out:
        emit_table(rows, fmt, args.out, spec)
    else:
        sys.stdout.write(render_table(rows, fmt, spec.axis, columns=spec.columns()))
    failed = [r for r in rows if r.failure]
    flagged = sum(r.bad_cavity for r in rows)
    if failed or flagged:
        print(f"{len(failed)} rows failed, {flagged} rows outside the bad-cavity regime", file=sys.stderr)
    return EXIT_OK


def cmd_figure(args) -> int:
    try:
        spec = figure_spec(args.name, points=args.points, tol=args.tol)
    except UnknownFigure as exc:
        raise CliError(exc.args[0], EXIT_FIGURE) from None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = run_sweep(spec)
    path = emit_table(rows, args.format, out_dir / f"{args.name}.{args.format}", spec)
    failed = sum(r.failure is not None for r in rows)
    summary = {"figure": args.name, "path": str(path), "rows": len(rows), "failed_rows": failed}
    print(_dump(summary) if args.json else f"wrote {path} ({len(rows)} rows, {failed} failed)")
    return EXIT_OK


def cmd_validate(args) -> int:
    atom, dc, sd, tr, notes = _system(_gather(args))
    report = check_bad_cavity(dc, args.margin)
    out = {
        "passed": report.passed,
        "g_over_kappa": report.ratio,
        "margin": report.margin,
        "g": dc.g,
        "kappa": dc.kappa,
        "eta": dc.eta,
        "zeta": tr.zeta,
        "gamma": tr.gamma,
        "accel": tr.accel,
        "omega0_bar": tr.omega0_bar,
        "notes": notes,
    }
    if args.json:
        print(_dump(out))
    else:
        print(report)
        for k in ("g", "kappa", "eta", "zeta", "gamma", "accel", "omega0_bar"):
            print(f"{k:>12} = {out[k]:.6g}")
        for n in notes:
            print(f"note: {n}")
    return EXIT_OK if report.passed else EXIT_VALIDITY


def cmd_selfcheck(args) -> int:
    from .selfcheck import format_table, run_selfcheck

    checks = run_selfcheck()
    if args.json:
        print(_dump([c.__dict__ for c in checks]))
    else:
        print(format_table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_SELFCHECK


COMMANDS = {
    "shift": cmd_shift,
    "sweep": cmd_sweep,
    "figure": cmd_figure,
    "validate": cmd_validate,
    "selfcheck": cmd_selfcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParameterError as exc:
        print(f"error: invalid parameter {exc}", file=sys.stderr)
        return EXIT_VALIDITY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PVError as exc:
        print(f"error: quadrature failed: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Commands::

    orbitdim dim       box dimension of an orbit (JSON report, optional CSV)
    orbitdim classify  spectral verdict, optionally with the fractal detector
    orbitdim manifold  invariant-manifold expansion and restricted map
    orbitdim orbit     dump orbit points as CSV
    orbitdim catalog   list catalog entries or print one as a config file

Exit codes: 0 success (warnings are embedded in the report), 2 bad
configuration or I/O, 3 mathematical refusal (resonance, divergence,
degenerate input), 4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boxdim import (
    EstimationError,
    estimate_dimension,
    epsilon_grid,
    projective_dimensions,
    tail_exponent_dimension,
)
from .classify import (
    ClassificationError,
    ConsistencyError,
    classify_flow_singularity,
    classify_map_fixed_point,
    detect_nonhyperbolic_via_dimension,
)
from .config import ConfigError, RunParameters, SystemConfig, load_config, parse_assignments, parse_vector
from .dynsys import OrbitError
from .expr import ExpressionError, NonFiniteError
from .linalg import EigenConvergenceError
from .manifolds import (
    DEFAULT_ORDER,
    ManifoldError,
    nondegeneracy_order,
    restrict_to_manifold,
    solve_invariance,
)
from .syslib import catalog_source, entry_names, get_entry, run_orbit

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REFUSED = 3
EXIT_CONSISTENCY = 4

_TEMPLATE = "saddle-ex2-template"


class _Refusal(Exception):
    pass


# -- output helpers -------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars plain numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def _write(text: str, path: str | None, stdout):
    if path is None or path == "-":
        stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror or exc}") from exc


def measurements_csv(estimate) -> str:
    rows = sorted(estimate.measurements, key=lambda m: m.epsilon)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "measure", "method"])
    last = -math.inf
    for m in rows:
        if m.epsilon <= last:
            continue
        w.writerow([repr(float(m.epsilon)), repr(float(m.measure)), m.method])
        last = m.epsilon
    return buf.getvalue()


# -- config resolution ----------------------------------------------------------


def _load(args) -> SystemConfig:
    if args.config:
        entry = load_config(args.config)
        if args.set:
            entry = entry.with_parameters(parse_assignments(args.set))
        return entry
    if not args.system:
        raise ConfigError("one of --system or --config is required")
    overrides = parse_assignments(args.set) if args.set else None
    return get_entry(args.system, overrides)


def _run_params(args, entry: SystemConfig) -> RunParameters:
    base = entry.run
    return RunParameters(
        x0=parse_vector(args.x0, None, "--x0") if getattr(args, "x0", None) else base.x0,
        max_n=getattr(args, "max_n", None) or base.max_n,
        delta=getattr(args, "delta", None) or base.delta,
        eps_samples=getattr(args, "eps_samples", None) or base.eps_samples,
        theta=getattr(args, "theta", None) or base.theta,
        eta=base.eta if getattr(args, "eta", None) is None else args.eta,
        order=getattr(args, "order", None) or base.order,
        seed=base.seed if getattr(args, "seed", None) is None else args.seed,
    )


def _orbit(entry, args, params):
    spec = entry.orbits.get(args.orbit) if args.orbit else entry.designated_orbit
    if spec is None:
        known = ", ".join(entry.orbits) or "none"
        raise ConfigError(f"no orbit {args.orbit or '(designated)'} for {entry.name!r}; known: {known}")
    x1 = params.x0
    if x1 is not None and len(x1) != len(spec.x1):
        raise ConfigError(f"--x0 needs {len(spec.x1)} value(s) for this orbit")
    orbit = run_orbit(entry, spec, x1=x1, max_n=params.max_n, delta=params.delta)
    return spec, orbit


def _orbit_summary(spec, orbit) -> dict:
    return {
        "label": spec.label,
        "direction": orbit.direction,
        "on_manifold_axis": spec.manifold_axis,
        "initial_point": orbit.initial,
        "length": len(orbit),
        "termination": str(orbit.termination),
    }


# -- commands ---------------------------------------------------------------------


def cmd_dim(args, stdout) -> int:
    entry = _load(args)
    params = _run_params(args, entry)
    spec, orbit = _orbit(entry, args, params)
    try:
        eps = epsilon_grid(orbit.points, samples=params.eps_samples)
        method = None if args.method == "auto" else args.method
        primary = estimate_dimension(orbit, eps, method=method)
    except EstimationError as exc:
        raise _Refusal(str(exc)) from exc
    estimates = {primary.method: primary.to_dict()}
    if orbit.dimension == 1:
        other = "grid" if primary.measurements[0].method == "exact_1d" else "exact_1d"
        alt = estimate_dimension(orbit, eps, method=other)
        estimates[alt.method] = alt.to_dict()
        tail = tail_exponent_dimension(orbit)
        estimates["tail_exponent"] = tail.to_dict()
    report = {
        "command": "dim",
        "system": entry.name,
        "kind": entry.kind,
        "orbit": _orbit_summary(spec, orbit),
        "dimension": primary.value,
        "primary_method": primary.method,
        "estimates": estimates,
        "projective_dimensions": [e.to_dict() for e in projective_dimensions(orbit)],
        "eps_samples": params.eps_samples,
        "expected_dimension": spec.expected_dimension,
        "warnings": sorted({f for e in estimates.values() for f in e["flags"]}),
    }
    _write(dumps(report), args.output, stdout)
    if args.csv:
        _write(measurements_csv(primary), args.csv, stdout)
    return EXIT_OK


def _predicted(entry, report) -> tuple[int | None, float | None, list[str]]:
    """Nondegeneracy order and predicted on-manifold dimension when available."""
    sys_ = entry.system
    flags = []
    if report.verdict != "nonhyperbolic":
        return None, 0.0, flags
    if sys_.arity == 1:
        if entry.kind == "flow":
            table = sys_.components[0].taylor_coefficients(sys_.fixed_point, 5)
            orders = sorted(e for (e,), c in table.items() if e >= 2 and abs(c) > 1e-10)
            if orders and (1,) not in table:
                return orders[0], 1.0 - 1.0 / orders[0], flags
            return None, None, flags
        try:
            k, dim, extra = nondegeneracy_order(sys_)
        except ManifoldError:
            return None, None, flags
        return k, dim, flags + list(extra)
    if entry.manifold_axis is not None and entry.kind == "map":
        try:
            exp = solve_invariance(sys_, entry.manifold_axis, order=entry.manifold_order or DEFAULT_ORDER)
            k, dim, extra = nondegeneracy_order(restrict_to_manifold(sys_, exp))
        except ManifoldError:
            return None, None, flags
        return k, dim, flags + list(extra)
    return None, None, flags


def cmd_classify(args, stdout) -> int:
    entry = _load(args)
    params = _run_params(args, entry)
    if entry.kind == "map":
        spectral = classify_map_fixed_point(entry.system, None, params.eta)
    else:
        spectral = classify_flow_singularity(entry.system, None, params.eta)
    k, predicted, flags = _predicted(entry, spectral)
    report = {
        "command": "classify",
        "system": entry.name,
        "kind": entry.kind,
        "spectral": spectral.to_dict(),
        "verdict": spectral.verdict,
        "nondegeneracy_order": k,
        "predicted_dimension": predicted,
        "flags": flags,
    }
    if args.fractal:
        spec, orbit = _orbit(entry, args, params)
        detector = detect_nonhyperbolic_via_dimension(orbit, params.theta)
        report["fractal"] = {"orbit": _orbit_summary(spec, orbit), **detector.to_dict(), "theta": params.theta}
    _write(dumps(report), args.output, stdout)
    return EXIT_OK


def _closed_form_draws(draws: int, seed: int, order: int) -> dict:
    """Compare solver coefficients with the closed forms on random template draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_residual = 0.0
    for _ in range(draws):
        l1 = rng.uniform(0.2, 0.9) * rng.choice([-1.0, 1.0])
        l2 = rng.uniform(1.2, 3.0) * rng.choice([-1.0, 1.0])
        a1, a2, a3, b1, b2, b3 = rng.uniform(-1.0, 1.0, 6)
        entry = get_entry(_TEMPLATE, {
            "λ1": l1, "λ2": l2, "a1": a1, "a2": a2, "a3": a3, "b1": b1, "b2": b2, "b3": b3,
        })
        stable = solve_invariance(entry.system, 0, order=order)
        unstable = solve_invariance(entry.system, 1, order=order)
        alpha2 = b1 / (l1**2 - l2)
        alpha3 = b1 * (b2 - 2 * a1 * l1) / ((l1**2 - l2) * (l1**3 - l2))
        beta2 = a3 / (l2**2 - l1)
        beta3 = a3 * (a2 - 2 * b3 * l2) / ((l2**2 - l1) * (l2**3 - l1))
        got = [stable.coefficients[0, 0], stable.coefficients[0, 1],
               unstable.coefficients[0, 0], unstable.coefficients[0, 1]]
        worst = max(worst, max(abs(g - w) for g, w in zip(got, [alpha2, alpha3, beta2, beta3])))
        worst_residual = max(worst_residual, stable.residual, unstable.residual)
    return {"draws": draws, "seed": seed, "max_coefficient_error": worst,
            "max_invariance_residual": worst_residual}


def cmd_manifold(args, stdout) -> int:
    if args.draws:
        order = args.order or DEFAULT_ORDER
        if not 3 <= order <= 5:
            raise ConfigError("closed-form check needs --order in [3, 5]")
        seed = 0 if args.seed is None else args.seed
        report = {"command": "manifold", "closed_form_check": _closed_form_draws(args.draws, seed, order)}
        _write(dumps(report), args.output, stdout)
        return EXIT_OK
    entry = _load(args)
    params = _run_params(args, entry)
    if entry.kind != "map":
        raise ConfigError("manifold expansions are computed for maps only")
    axis = args.axis if args.axis is not None else (entry.manifold_axis or 0)
    order = params.order or entry.manifold_order or DEFAULT_ORDER
    exp = solve_invariance(entry.system, axis, args.kind, order)
    restricted = restrict_to_manifold(entry.system, exp)
    k = predicted = None
    flags = []
    try:
        k, predicted, extra = nondegeneracy_order(restricted)
        flags.append("k_first_nonvanishing_coefficient")
        flags.extend(extra)
    except ManifoldError as exc:
        flags.append(str(exc))
    report = {
        "command": "manifold",
        "system": entry.name,
        "parameters": dict(entry.parameters),
        "expansion": exp.to_dict(),
        "restricted_map": {
            "expression": str(restricted.system.components[0]),
            "coefficients": list(restricted.coefficients),
            "multiplier": restricted.multiplier,
        },
        "nondegeneracy_order": k,
        "predicted_dimension": predicted,
        "flags": flags,
    }
    _write(dumps(report), args.output, stdout)
    return EXIT_OK


def cmd_orbit(args, stdout) -> int:
    entry = _load(args)
    params = _run_params(args, entry)
    spec, orbit = _orbit(entry, args, params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", *entry.variables])
    for i, p in enumerate(orbit.points, start=1):
        w.writerow([i, *(repr(float(v)) for v in p)])
    _write(buf.getvalue(), args.output, stdout)
    return EXIT_OK


def cmd_catalog(args, stdout) -> int:
    if args.name:
        _write(catalog_source(args.name), args.output, stdout)
        return EXIT_OK
    rows = []
    for name in entry_names():
        e = get_entry(name)
        rows.append({
            "name": name,
            "kind": e.kind,
            "description": e.description,
            "expected_verdict": e.expected_verdict,
            "orbits": {
                label: {"expected_dimension": s.expected_dimension, "tolerance": s.tolerance}
                for label, s in e.orbits.items()
            },
        })
    _write(dumps({"command": "catalog", "entries": rows}), args.output, stdout)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitdim", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def system_args(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--system", help="catalog entry name")
        src.add_argument("--config", help="path to a system config file")
        p.add_argument("--set", help="parameter overrides, e.g. 'a=1,b=2'")
        p.add_argument("--output", "-o", help="write the report here instead of stdout")

    def orbit_args(p):
        p.add_argument("--orbit", help="orbit label (default: the designated orbit)")
        p.add_argument("--x0", help="initial point, comma separated")
        p.add_argument("--max-n", type=_positive_int, help="maximum orbit length")
        p.add_argument("--delta", type=_positive_float, help="convergence radius")

    p = sub.add_parser("dim", help="estimate the box dimension of an orbit")
    system_args(p)
    orbit_args(p)
    p.add_argument("--eps-samples", type=_positive_int, help="number of epsilon samples (>= 32)")
    p.add_argument("--method", choices=("auto", "exact_1d", "grid"), default="auto")
    p.add_argument("--csv", help="write (epsilon, measure, method) rows here")
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("classify", help="classify the fixed point or singularity")
    system_args(p)
    orbit_args(p)
    p.add_argument("--eta", type=float, help="unit-circle / imaginary-axis tolerance")
    p.add_argument("--fractal", action="store_true", help="also run the projective-dimension detector")
    p.add_argument("--theta", type=_positive_float, help="detector threshold")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("manifold", help="invariant manifold expansion and restricted map")
    system_args(p)
    p.add_argument("--axis", type=int, help="eigen-axis the manifold is a graph over")
    p.add_argument("--kind", choices=("stable", "unstable", "center"))
    p.add_argument("--order", type=int, help="expansion order K (2..5)")
    p.add_argument("--draws", type=_positive_int,
                   help="instead: check closed-form coefficients on this many random template draws")
    p.add_argument("--seed", type=int, help="random seed for --draws")
    p.set_defaults(func=cmd_manifold)

    p = sub.add_parser("orbit", help="dump orbit points as CSV")
    system_args(p)
    orbit_args(p)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("catalog", help="list catalog entries or print one")
    p.add_argument("name", nargs="?", help="entry to print as a config file")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, stdout)
    except ConsistencyError as exc:
        print(f"orbitdim: consistency failure: {exc}", file=stderr)
        return EXIT_CONSISTENCY
    except (_Refusal, NonFiniteError, ManifoldError, OrbitError, EstimationError,
            ClassificationError, EigenConvergenceError, ArithmeticError) as exc:
        print(f"orbitdim: refused: {exc}", file=stderr)
        return EXIT_REFUSED
    except (ConfigError, ExpressionError, ValueError) as exc:
        print(f"orbitdim: error: {exc}", file=stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

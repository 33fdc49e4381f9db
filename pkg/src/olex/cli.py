"""Command-line front end.

    olex solve    --body K.json --phi '{"type":"power","p":2}'
    olex legendre --body K.json
    olex loewner  --body K.json
    olex sweep    --body K.json --phi ... --p-list 1,2,4,8
    olex verify   --body K.json --suite inequalities

Reports are JSON (schema "olex/1") written to --output or stdout; traces go
to --csv-trace.  Exit codes: 0 success, 1 configuration error, 2 solver did
not converge (report still written), 3 numeric error, 4 a verification
check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import StarBody, body_from_spec, quadrature_volume, volume
from .ellipsoid import Ellipsoid
from .errors import (
    CapabilityError,
    ConfigurationError,
    DomainError,
    InternalError,
    NumericError,
)
from .functionals import (
    FunctionalContext,
    dual_orlicz_mixed_volume,
    normalized_dual_volume,
    o_phi,
    quadrature_tolerance,
)
from .loewner import loewner
from .orlicz import OrliczFunction, phi_from_spec, power
from .quadrature import SCHEMES, SphericalGrid, ball_volume, build_grid
from .solver import (
    SolveOptions,
    legendre_closed_form,
    limit_sweep,
    orlicz_legendre,
    with_options,
)
from .verify import SUITES, run_suite

SCHEMA = "olex/1"
COMMANDS = ("solve", "legendre", "loewner", "sweep", "verify")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4

log = logging.getLogger("olex")


def _load_json(text: str, what: str):
    """Inline JSON or a path to a JSON file."""
    try:
        if text.lstrip().startswith(("{", "[")):
            return json.loads(text)
        return json.loads(Path(text).read_text())
    except FileNotFoundError as exc:
        raise ConfigurationError(f"{what} file not found: {text}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid {what} JSON: {exc}") from exc


def _p_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"--p-list must be comma-separated numbers: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="olex", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"olex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--body", required=True, help="body spec: JSON file or inline JSON")
    common.add_argument("--dim", type=int, help="dimension (checked against the body; sets it for balls)")
    common.add_argument("--resolution", type=int, help="base node count of the grid before mirroring")
    common.add_argument("--scheme", choices=SCHEMES, help="quadrature scheme")
    common.add_argument("--seed", type=int, help="seed for monte_carlo_seeded grids")
    common.add_argument("--output", help="report path (default: stdout)")
    common.add_argument("--timing", action="store_true",
                        help="add wall time to the report (makes it non-reproducible)")
    common.add_argument("-v", "--verbose", action="store_true")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--phi", default='{"type":"power","p":2}',
                        help="Orlicz function spec: JSON file or inline JSON")
    solver.add_argument("--max-iterations", type=int)
    solver.add_argument("--isotropy-tol", type=float)
    solver.add_argument("--step-init", type=float)
    solver.add_argument("--backtrack-factor", type=float)
    solver.add_argument("--outer-tol", type=float)
    solver.add_argument("--algorithm", choices=("gradient", "derivative_free"))
    solver.add_argument("--warm-start", choices=("ball", "legendre"))

    p = sub.add_parser("solve", parents=[common, solver], help="Orlicz-Legendre ellipsoid L_phi K")
    p.add_argument("--csv-trace", help="per-iteration CSV: iter,objective,isotropy_residual,step")
    sub.add_parser("legendre", parents=[common], help="classical Legendre ellipsoid (closed form)")
    sub.add_parser("loewner", parents=[common], help="minimum-volume symmetric ellipsoid containing K")
    p = sub.add_parser("sweep", parents=[common, solver], help="L_{phi^p} K along a list of p")
    p.add_argument("--p-list", default="1,2,4,8,16,32", help="increasing comma-separated p >= 1")
    p.add_argument("--csv-trace", help="per-p CSV: p,volume,dist_to_loewner")
    p = sub.add_parser("verify", parents=[common, solver], help="run a numerical check suite")
    p.add_argument("--suite", choices=SUITES, default="all")
    return parser


def _body(args) -> tuple[StarBody, dict]:
    spec = _load_json(args.body, "body")
    if not isinstance(spec, dict):
        raise ConfigurationError("body spec must be a JSON object")
    if spec.get("type") == "ball" and "dim" not in spec and args.dim:
        spec = {**spec, "dim": args.dim}
    K = body_from_spec(spec)
    if args.dim is not None and args.dim != K.dim:
        raise ConfigurationError(f"--dim {args.dim} does not match the body dimension {K.dim}")
    return K, spec


def _grid(args, dim: int) -> SphericalGrid:
    return build_grid(dim, args.resolution, args.scheme, args.seed)


def _phi(args) -> tuple[OrliczFunction, dict]:
    spec = _load_json(args.phi, "phi")
    return phi_from_spec(spec), spec


def _options(args) -> SolveOptions:
    return with_options(None, max_iterations=args.max_iterations, isotropy_tol=args.isotropy_tol,
                        step_init=args.step_init, backtrack_factor=args.backtrack_factor,
                        outer_tol=args.outer_tol, algorithm=args.algorithm,
                        warm_start=args.warm_start)


def _clean(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _write_csv(path: str, header: list[str], rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])


def _volume_diagnostics(K: StarBody, grid: SphericalGrid, E: Ellipsoid) -> dict:
    n = K.dim
    vol_K = volume(K, grid)
    vol_E = E.volume
    return {
        "volume_K": vol_K,
        "volume_K_quadrature": quadrature_volume(K, grid),
        "volume_ellipsoid": vol_E,
        "ratio_ellipsoid_over_K": vol_E / vol_K,
        "lower_bound_ratio": 1.0,
        "outer_ratio_K_over_ellipsoid": vol_K / vol_E,
        "outer_ratio_bound": 2 ** n / (math.factorial(n) * ball_volume(n)),
        "outer_ratio_bound_applies": bool(K.convex_symmetric),
        "quadrature_tolerance": quadrature_tolerance(K, grid),
    }


def _functionals(K, grid, phi, E) -> dict:
    ctx = FunctionalContext(K, grid, phi)
    return {
        "dual_orlicz_mixed_volume": dual_orlicz_mixed_volume(ctx, E),
        "normalized_dual_volume": normalized_dual_volume(ctx, E),
        "o_phi": o_phi(ctx, E),
    }


def _cmd_solve(args, K, grid, report):
    phi, phi_spec = _phi(args)
    opts = _options(args)
    report["input"]["phi"] = phi_spec
    report["input"]["options"] = _options_dict(opts)
    E, rep = orlicz_legendre(K, phi, grid, opts)
    L_inf = loewner(K, grid)
    diag = _volume_diagnostics(K, grid, E)
    diag["loewner_volume"] = L_inf.volume
    report.update({
        "ellipsoid": E.to_dict(),
        "normalized_ellipsoid": E.normalized().to_dict(),
        "functionals": _functionals(K, grid, phi, E),
        "isotropy_residual": rep.final_residual if rep.certificate == "available" else None,
        "volume_diagnostics": diag,
        "solver": rep.to_dict(),
        "iterations": rep.iterations,
    })
    if args.csv_trace:
        rows = []
        for i, f in enumerate(rep.objective_trace):
            res = rep.isotropy_residual_trace[i] if i < len(rep.isotropy_residual_trace) else math.nan
            step = rep.step_trace[i] if i < len(rep.step_trace) else math.nan
            rows.append((i, f, res, step))
        _write_csv(args.csv_trace, ["iter", "objective", "isotropy_residual", "step"], rows)
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def _cmd_legendre(args, K, grid, report):
    E = legendre_closed_form(K, grid)
    report.update({
        "ellipsoid": E.to_dict(),
        "functionals": _functionals(K, grid, power(2), E),
        "volume_diagnostics": _volume_diagnostics(K, grid, E),
    })
    return EXIT_OK


def _cmd_loewner(args, K, grid, report):
    E = loewner(K, grid)
    rho = np.asarray(K.radial(grid.nodes))
    report.update({
        "ellipsoid": E.to_dict(),
        "containment_max_ratio": float(np.max(rho / E.radial(grid.nodes))),
        "volume_diagnostics": _volume_diagnostics(K, grid, E),
    })
    return EXIT_OK


def _workers(count: int) -> int:
    cap = os.environ.get("OLEX_THREADS")
    try:
        limit = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError as exc:
        raise ConfigurationError("OLEX_THREADS must be an integer") from exc
    return max(1, min(limit, count))


def _cmd_sweep(args, K, grid, report):
    phi, phi_spec = _phi(args)
    opts = _options(args)
    p_list = _p_list(args.p_list)
    report["input"].update(phi=phi_spec, options=_options_dict(opts), p_list=p_list)
    L_inf = loewner(K, grid)
    workers = _workers(len(p_list))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = limit_sweep(K, phi, p_list, grid, opts, L_inf, pool)
    else:
        entries = limit_sweep(K, phi, p_list, grid, opts, L_inf)
    report.update({
        "loewner": L_inf.to_dict(),
        "entries": [{
            "p": e.p,
            "status": e.status,
            "volume": e.volume,
            "dist_to_loewner": e.dist_to_loewner,
            "ellipsoid": e.ellipsoid.to_dict() if e.ellipsoid is not None else None,
            "iterations": e.report.iterations if e.report else None,
            "error": e.error,
        } for e in entries],
    })
    if args.csv_trace:
        _write_csv(args.csv_trace, ["p", "volume", "dist_to_loewner"],
                   [(e.p, e.volume, e.dist_to_loewner) for e in entries])
    if any(e.status == "error" for e in entries):
        return EXIT_NUMERIC
    return EXIT_OK if all(e.status == "converged" for e in entries) else EXIT_NOT_CONVERGED


def _cmd_verify(args, K, grid, report):
    phi, phi_spec = _phi(args)
    opts = _options(args)
    report["input"].update(phi=phi_spec, options=_options_dict(opts), suite=args.suite)
    result = run_suite(args.suite, K, phi, grid, opts)
    report.update(result)
    return EXIT_OK if result["passed"] else EXIT_VERIFY


def _options_dict(opts: SolveOptions) -> dict:
    return {
        "max_iterations": opts.max_iterations,
        "isotropy_tol": opts.isotropy_tol,
        "step_init": opts.step_init,
        "backtrack_factor": opts.backtrack_factor,
        "outer_tol": opts.outer_tol,
        "algorithm": opts.algorithm,
        "warm_start": opts.warm_start,
    }


HANDLERS = {
    "solve": _cmd_solve,
    "legendre": _cmd_legendre,
    "loewner": _cmd_loewner,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def run(args: argparse.Namespace) -> int:
    """Execute a parsed command; returns the exit code."""
    start = time.perf_counter()
    try:
        K, body_spec = _body(args)
        grid = _grid(args, K.dim)
        report = {"schema": SCHEMA, "command": args.command,
                  "input": {"body": body_spec}, "grid": grid.describe()}
        code = HANDLERS[args.command](args, K, grid, report)
    except (ConfigurationError, CapabilityError, DomainError) as exc:
        print(f"olex: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, InternalError, FloatingPointError) as exc:
        print(f"olex: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    report["exit_code"] = code
    if args.timing:
        report["wall_time_seconds"] = time.perf_counter() - start
    _write(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n", args.output)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
